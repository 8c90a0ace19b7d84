#include "fracfield/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace fracfield {

Quadrature1D gauss_1d(int n_points) {
  // points and weights on [-1,1], mapped to [0,1] below
  std::vector<double> x;
  std::vector<double> w;
  switch (n_points) {
    case 1:
      x = {0.0};
      w = {2.0};
      break;
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      x = {-a, a};
      w = {1.0, 1.0};
      break;
    }
    case 3: {
      const double a = std::sqrt(0.6);
      x = {-a, 0.0, a};
      w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      x = {-b, -a, a, b};
      w = {wb, wa, wa, wb};
      break;
    }
    case 5: {
      const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      x = {-b, -a, 0.0, a, b};
      w = {wb, wa, 128.0 / 225.0, wa, wb};
      break;
    }
    default:
      throw std::invalid_argument("gauss_1d: supported orders are 1..5");
  }
  Quadrature1D q;
  for (std::size_t i = 0; i < x.size(); ++i) {
    q.points.push_back(0.5 * (x[i] + 1.0));
    q.weights.push_back(0.5 * w[i]);
  }
  return q;
}

Quadrature2D gauss_tensor(int n_points_per_direction) {
  const Quadrature1D g = gauss_1d(n_points_per_direction);
  Quadrature2D q;
  for (std::size_t j = 0; j < g.points.size(); ++j) {
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      q.points.emplace_back(g.points[i], g.points[j]);
      q.weights.push_back(g.weights[i] * g.weights[j]);
    }
  }
  return q;
}

}  // namespace fracfield
