#include "fracfield/shape.hpp"

#include <stdexcept>

namespace fracfield {

namespace {

double lagrange1(int i, double t) { return i == 0 ? 1.0 - t : t; }
double lagrange1_d(int i, double) { return i == 0 ? -1.0 : 1.0; }

double lagrange2(int i, double t) {
  switch (i) {
    case 0: return 2.0 * (t - 0.5) * (t - 1.0);
    case 1: return 4.0 * t * (1.0 - t);
    default: return 2.0 * t * (t - 0.5);
  }
}

double lagrange2_d(int i, double t) {
  switch (i) {
    case 0: return 4.0 * t - 3.0;
    case 1: return 4.0 - 8.0 * t;
    default: return 4.0 * t - 1.0;
  }
}

}  // namespace

int n_shape(Element e) {
  switch (e) {
    case Element::Q1: return 4;
    case Element::Q2: return 9;
    case Element::P1Disc: return 3;
  }
  return 0;
}

double shape_value(Element e, int i, const Point& ref) {
  switch (e) {
    case Element::Q1: return lagrange1(i % 2, ref.x()) * lagrange1(i / 2, ref.y());
    case Element::Q2: return lagrange2(i % 3, ref.x()) * lagrange2(i / 3, ref.y());
    case Element::P1Disc:
      if (i == 0) return 1.0;
      return i == 1 ? 2.0 * ref.x() - 1.0 : 2.0 * ref.y() - 1.0;
  }
  throw std::invalid_argument("shape_value: unknown element");
}

Point shape_grad(Element e, int i, const Point& ref) {
  switch (e) {
    case Element::Q1: {
      const int a = i % 2;
      const int b = i / 2;
      return {lagrange1_d(a, ref.x()) * lagrange1(b, ref.y()), lagrange1(a, ref.x()) * lagrange1_d(b, ref.y())};
    }
    case Element::Q2: {
      const int a = i % 3;
      const int b = i / 3;
      return {lagrange2_d(a, ref.x()) * lagrange2(b, ref.y()), lagrange2(a, ref.x()) * lagrange2_d(b, ref.y())};
    }
    case Element::P1Disc:
      if (i == 0) return {0.0, 0.0};
      return i == 1 ? Point{2.0, 0.0} : Point{0.0, 2.0};
  }
  throw std::invalid_argument("shape_grad: unknown element");
}

ShapeTable::ShapeTable(Element e, std::span<const Point> points) : element(e), n_shape(fracfield::n_shape(e)) {
  value.resize(points.size() * n_shape);
  ref_grad.resize(points.size() * n_shape);
  for (std::size_t q = 0; q < points.size(); ++q) {
    for (int i = 0; i < n_shape; ++i) {
      value[q * n_shape + i] = shape_value(e, i, points[q]);
      ref_grad[q * n_shape + i] = shape_grad(e, i, points[q]);
    }
  }
}

}  // namespace fracfield
