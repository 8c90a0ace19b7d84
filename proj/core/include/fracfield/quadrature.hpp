#pragma once

#include <vector>

#include "fracfield/mesh.hpp"

namespace fracfield {

/// Gauss-Legendre rule on [0,1].
struct Quadrature1D {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Tensor rule on the reference square [0,1]^2.
struct Quadrature2D {
  std::vector<Point> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

Quadrature1D gauss_1d(int n_points);
Quadrature2D gauss_tensor(int n_points_per_direction);

}  // namespace fracfield
