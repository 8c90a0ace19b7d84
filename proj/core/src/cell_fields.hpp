#pragma once

// Pointwise evaluation of a SystemState at the quadrature points of one cell.

#include <vector>

#include "fracfield/model.hpp"

namespace fracfield::detail {

struct PointFields {
  Point x = Point::Zero();
  double weight = 0.0;  // quadrature weight times cell area
  Point u = Point::Zero();
  Tensor2 grad_u = Tensor2::Zero();  // grad_u(c, j) = d u_c / d x_j
  double p = 0.0;
  double phi = 0.0;
  Point grad_phi = Point::Zero();
  double phi_prev = 0.0;

  Tensor2 strain() const { return 0.5 * (grad_u + grad_u.transpose()); }
};

class CellFields {
 public:
  CellFields(const FESystem& fe, const Quadrature2D& quad)
      : fe_(fe),
        quad_(quad),
        u_tab_(fe.displacement_dofs().element(), quad.points),
        p_tab_(Element::P1Disc, quad.points),
        phi_tab_(Element::Q1, quad.points) {}

  const ShapeTable& phi_table() const { return phi_tab_; }
  const Quadrature2D& quadrature() const { return quad_; }

  void evaluate(int cell, const SystemState& s, std::vector<PointFields>& out) const {
    const QuadMesh& mesh = fe_.mesh();
    const Rect box = mesh.cell_box(cell);
    const double hx = box.width();
    const double hy = box.height();
    const auto ud = fe_.displacement_dofs().cell_dofs(cell);
    const auto fd = fe_.phase_dofs().cell_dofs(cell);
    const int nuc = static_cast<int>(fe_.n_u_component());
    out.assign(quad_.size(), PointFields{});
    for (std::size_t q = 0; q < quad_.size(); ++q) {
      PointFields& f = out[q];
      f.x = {box.x0 + quad_.points[q].x() * hx, box.y0 + quad_.points[q].y() * hy};
      f.weight = quad_.weights[q] * hx * hy;
      for (int a = 0; a < static_cast<int>(ud.size()); ++a) {
        const double ux = s.u[ud[a]];
        const double uy = s.u[nuc + ud[a]];
        const double n = u_tab_.v(q, a);
        const Point g = u_tab_.grad(q, a, hx, hy);
        f.u += Point(ux * n, uy * n);
        f.grad_u.row(0) += ux * g.transpose();
        f.grad_u.row(1) += uy * g.transpose();
      }
      if (fe_.has_pressure()) {
        for (int k = 0; k < 3; ++k) f.p += s.p[3 * cell + k] * p_tab_.v(q, k);
      }
      for (int i = 0; i < 4; ++i) {
        const double n = phi_tab_.v(q, i);
        f.phi += s.phi[fd[i]] * n;
        f.phi_prev += s.phi_prev[fd[i]] * n;
        f.grad_phi += s.phi[fd[i]] * phi_tab_.grad(q, i, hx, hy);
      }
    }
  }

 private:
  const FESystem& fe_;
  Quadrature2D quad_;
  ShapeTable u_tab_;
  ShapeTable p_tab_;
  ShapeTable phi_tab_;
};

// sigma : e with the stress law of the form in use
inline double stress_work(const FESystem& fe, const PointFields& f, const LocalMaterial& mat) {
  const Tensor2 e = f.strain();
  const Tensor2 sigma = fe.has_pressure() ? stress_mixed(e, f.p, mat) : stress_primal(e, mat);
  return (sigma.array() * e.array()).sum();
}

}  // namespace fracfield::detail
