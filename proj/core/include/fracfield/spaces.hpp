#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fracfield/mesh.hpp"
#include "fracfield/shape.hpp"

namespace fracfield {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct ConstraintEntry {
  int index = -1;
  double weight = 0.0;
};

/// Continuous Lagrange Q1 or Q2 scalar space with hanging-node constraints.
///
/// Constrained dofs are expressed through unconstrained masters only (flattened table).
/// For degree 1 the dof numbering coincides with the mesh node numbering.
class ScalarDofHandler {
 public:
  ScalarDofHandler(const QuadMesh& mesh, int degree);

  int degree() const { return degree_; }
  Element element() const { return degree_ == 1 ? Element::Q1 : Element::Q2; }
  int dofs_per_cell() const { return dofs_per_cell_; }
  std::size_t n_dofs() const { return points_.size(); }

  std::span<const int> cell_dofs(int active) const {
    return {cell_dofs_.data() + static_cast<std::size_t>(active) * dofs_per_cell_,
            static_cast<std::size_t>(dofs_per_cell_)};
  }
  const Point& support_point(int dof) const { return points_[dof]; }
  bool on_boundary(int dof) const { return boundary_[dof] != 0; }
  bool is_constrained(int dof) const { return constraint_offsets_[dof + 1] > constraint_offsets_[dof]; }
  std::span<const ConstraintEntry> constraint(int dof) const {
    return {constraint_entries_.data() + constraint_offsets_[dof],
            static_cast<std::size_t>(constraint_offsets_[dof + 1] - constraint_offsets_[dof])};
  }
  std::size_t n_constrained() const;

 private:
  int degree_ = 1;
  int dofs_per_cell_ = 4;
  std::vector<int> cell_dofs_;
  std::vector<Point> points_;
  std::vector<char> boundary_;
  std::vector<int> constraint_offsets_;
  std::vector<ConstraintEntry> constraint_entries_;
};

enum class FormKind { Primal, Mixed, MixedRobust };

/// Homogeneous Dirichlet conditions for the displacement: decides, for a support point on the
/// domain boundary, whether component c (0: x, 1: y) is held at zero. The default clamps both.
using DisplacementClamp = std::function<bool(const Point& x, int component)>;

const char* to_string(FormKind form);

/// Degree-of-freedom layout for (u, p, phi) over one mesh.
///
/// Raw numbering: [u_x | u_y | p | phi], with p the per-cell P1 coefficients (absent for the
/// primal form). Free numbering drops hanging and Dirichlet (u = 0 on the boundary) dofs and
/// keeps the same block order, so the (u,p) block and the phi block are contiguous ranges.
class FESystem {
 public:
  FESystem(std::shared_ptr<const QuadMesh> mesh, FormKind form, DisplacementClamp clamp = {});

  FormKind form() const { return form_; }
  bool has_pressure() const { return form_ != FormKind::Primal; }
  int displacement_degree() const { return u_dofs_.degree(); }

  const QuadMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const QuadMesh>& mesh_ptr() const { return mesh_; }
  const ScalarDofHandler& displacement_dofs() const { return u_dofs_; }
  const ScalarDofHandler& phase_dofs() const { return phi_dofs_; }

  std::size_t n_u_component() const { return u_dofs_.n_dofs(); }
  std::size_t n_u() const { return 2 * u_dofs_.n_dofs(); }
  std::size_t n_p() const { return has_pressure() ? 3 * mesh_->n_active() : 0; }
  std::size_t n_phi() const { return phi_dofs_.n_dofs(); }
  std::size_t n_raw() const { return n_u() + n_p() + n_phi(); }
  std::size_t raw_offset_p() const { return n_u(); }
  std::size_t raw_offset_phi() const { return n_u() + n_p(); }

  /// Raw dofs of one cell ordered [u_x | u_y | p | phi].
  void cell_raw_dofs(int active, std::vector<int>& out) const;
  int local_size() const { return 2 * u_dofs_.dofs_per_cell() + (has_pressure() ? 3 : 0) + 4; }

  std::size_t n_free() const { return n_free_; }
  std::size_t n_free_u() const { return n_free_u_; }
  std::size_t n_free_up() const { return n_free_u_ + n_p(); }
  std::size_t n_free_phi() const { return n_free_ - n_free_up(); }
  /// True if the displacement component dof (raw index < n_u()) is held at zero.
  bool is_dirichlet(int raw_u) const { return dirichlet_[raw_u] != 0; }
  /// Free index of a raw dof, -1 if the dof is constrained or Dirichlet.
  int free_index(int raw) const { return free_index_[raw]; }
  /// Raw dof behind a free index.
  int raw_index(int free) const { return raw_of_free_[free]; }
  /// Representation of a raw dof in free dofs (empty for Dirichlet dofs).
  std::span<const ConstraintEntry> expansion(int raw) const {
    return {expansion_entries_.data() + expansion_offsets_[raw],
            static_cast<std::size_t>(expansion_offsets_[raw + 1] - expansion_offsets_[raw])};
  }
  /// Expansion matrix T (n_raw x n_free) with x_raw = T x_free.
  const SparseMatrix& expansion_matrix() const { return expansion_matrix_; }

  Vector expand(const Vector& free) const;
  /// T^T r for a raw residual.
  Vector condense(const Vector& raw) const;
  /// Picks the free entries of a raw vector.
  Vector restrict_to_free(const Vector& raw) const;
  /// Makes a raw vector consistent with the constraints (hanging values from masters,
  /// Dirichlet values zero).
  void distribute(Vector& raw) const;

 private:
  std::shared_ptr<const QuadMesh> mesh_;
  FormKind form_;
  ScalarDofHandler u_dofs_;
  ScalarDofHandler phi_dofs_;
  std::size_t n_free_ = 0;
  std::size_t n_free_u_ = 0;
  std::vector<char> dirichlet_;
  std::vector<int> free_index_;
  std::vector<int> raw_of_free_;
  std::vector<int> expansion_offsets_;
  std::vector<ConstraintEntry> expansion_entries_;
  SparseMatrix expansion_matrix_;
};

/// Nodal interpolation: f at unconstrained support points, constrained dofs from the table.
Vector interpolate_nodal(const ScalarDofHandler& dofs, const std::function<double(const Point&)>& f);

struct CondensedSystem {
  SparseMatrix matrix;
  Vector rhs;
};

/// Eliminates hanging and Dirichlet dofs: returns (T^T K T, T^T f).
CondensedSystem constrain(const FESystem& fe, const SparseMatrix& raw_matrix, const Vector& raw_rhs);

/// Point evaluation of a scalar finite element field.
double evaluate_scalar(const QuadMesh& mesh, const ScalarDofHandler& dofs, const Vector& coeffs, const Point& p);
Point evaluate_scalar_gradient(const QuadMesh& mesh, const ScalarDofHandler& dofs, const Vector& coeffs,
                               const Point& p);
/// Same, restricted to one cell (the point may lie on the cell boundary).
double evaluate_on_cell(const QuadMesh& mesh, const ScalarDofHandler& dofs, const Vector& coeffs, int cell,
                        const Point& p);
Point evaluate_gradient_on_cell(const QuadMesh& mesh, const ScalarDofHandler& dofs, const Vector& coeffs, int cell,
                                const Point& p);

}  // namespace fracfield
