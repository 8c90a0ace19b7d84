#pragma once

#include <array>
#include <functional>
#include <memory>

#include <Eigen/Core>

#include "fracfield/spaces.hpp"

namespace fracfield {

using RTLocalMatrix = Eigen::Matrix<double, 12, 18>;

/// Second-order Raviart-Thomas element on the reference square.
///
/// Components: v_x in Q_{2,1}, v_y in Q_{1,2}. Degrees of freedom, in this order:
///   0-3   moments of v_x on x = 0 and x = 1 against {1, s}
///   4-7   moments of v_y on y = 0 and y = 1 against {1, s}
///   8-11  interior moments against (1,0), (y,0), (0,1), (0,x)
/// Normals are the fixed +x / +y directions, so neighbouring cells share face moments
/// without sign changes.
class RTReference {
 public:
  static const RTReference& instance();

  Point value(int i, const Point& ref) const;
  /// Divergence split into d/dx and d/dy parts (reference coordinates).
  Point div_parts(int i, const Point& ref) const;

  /// The twelve functionals applied to a reference vector field.
  std::array<double, 12> dofs(const std::function<Point(const Point&)>& v) const;

  /// Functionals applied to the 18 reference Q2 vector basis functions [N_j e_x | N_j e_y].
  const RTLocalMatrix& q2_dofs() const { return q2_dofs_; }

 private:
  RTReference();

  // coefficients of each basis function on the component monomials x^a y^b
  std::array<std::array<double, 6>, 12> xcoef_{};
  std::array<std::array<double, 6>, 12> ycoef_{};
  RTLocalMatrix q2_dofs_;
};

/// Scaling of the reference functionals under the contravariant Piola map of an
/// hx x hy rectangle (x-component functionals pick up hy, y-component ones hx).
Eigen::Matrix<double, 12, 1> rt_piola_scaling(double hx, double hy);

/// Values and divergence of I_RT applied to each local Q2 vector test function, tabulated at
/// reference points. On rectangles the Piola factors cancel in the values, and the divergence is
/// (d/dx)/hx + (d/dy)/hy of the tabulated parts.
struct RTInterpolatedTable {
  std::size_t n_points = 0;
  std::vector<Point> value;      // [qp * 18 + j]
  std::vector<Point> div_parts;  // [qp * 18 + j]

  explicit RTInterpolatedTable(std::span<const Point> points);

  const Point& v(std::size_t qp, int j) const { return value[qp * 18 + j]; }
  double div(std::size_t qp, int j, double hx, double hy) const {
    const Point& d = div_parts[qp * 18 + j];
    return d.x() / hx + d.y() / hy;
  }
};

/// Global RT space: two moments per mesh face (faces shared by equal cells are shared dofs),
/// four interior moments per cell.
///
/// On a face carrying a hanging node the coarse cell and the two fine cells keep separate
/// face moments, so normal continuity holds across conforming faces only.
class RTSpace {
 public:
  explicit RTSpace(std::shared_ptr<const QuadMesh> mesh);

  const QuadMesh& mesh() const { return *mesh_; }
  std::size_t n_faces() const { return n_faces_; }
  std::size_t n_dofs() const { return 2 * n_faces_ + 4 * mesh_->n_active(); }
  std::array<int, 12> cell_dofs(int active) const;

  Point evaluate(const Vector& coeffs, int active, const Point& x) const;
  double divergence(const Vector& coeffs, int active, const Point& x) const;

 private:
  std::shared_ptr<const QuadMesh> mesh_;
  std::size_t n_faces_ = 0;
  std::vector<std::array<int, 4>> cell_faces_;
};

/// RT interpolant of a Q2 vector field given as raw displacement coefficients [u_x | u_y].
Vector interpolate_rt(const RTSpace& rt, const ScalarDofHandler& q2, const Vector& ux, const Vector& uy);

}  // namespace fracfield
