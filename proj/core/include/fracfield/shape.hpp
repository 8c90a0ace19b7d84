#pragma once

#include <vector>

#include "fracfield/mesh.hpp"
#include "fracfield/quadrature.hpp"

namespace fracfield {

/// Reference elements on [0,1]^2. Lagrange nodes are numbered lexicographically
/// (Q1: i + 2j, Q2: i + 3j with node coordinates i/degree, j/degree).
enum class Element { Q1, Q2, P1Disc };

int n_shape(Element e);
double shape_value(Element e, int i, const Point& ref);
/// Gradient with respect to reference coordinates.
Point shape_grad(Element e, int i, const Point& ref);

/// Shape values and reference gradients tabulated at the points of a quadrature rule.
struct ShapeTable {
  Element element = Element::Q1;
  int n_shape = 0;
  std::vector<double> value;     // [qp * n_shape + i]
  std::vector<Point> ref_grad;   // [qp * n_shape + i]

  ShapeTable() = default;
  ShapeTable(Element e, std::span<const Point> points);

  double v(std::size_t qp, int i) const { return value[qp * n_shape + i]; }
  /// Physical gradient on an axis-aligned cell of size hx x hy.
  Point grad(std::size_t qp, int i, double hx, double hy) const {
    const Point& g = ref_grad[qp * n_shape + i];
    return {g.x() / hx, g.y() / hy};
  }
};

}  // namespace fracfield
