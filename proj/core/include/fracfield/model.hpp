#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fracfield/quadrature.hpp"
#include "fracfield/rt.hpp"
#include "fracfield/shape.hpp"
#include "fracfield/spaces.hpp"

namespace fracfield {

using Tensor2 = Eigen::Matrix2d;

/// Lame parameters of one material region. At nu = 0.5 lambda is infinite and only
/// 1/lambda = 0 is meaningful.
struct LocalMaterial {
  double mu = 0.0;
  double lambda = 0.0;
  double inv_lambda = 0.0;
  bool incompressible = false;
};

LocalMaterial lame_parameters(double youngs_modulus, double poisson_ratio);

/// Piecewise constant elastic parameters on nested boxes (later boxes take precedence),
/// plus the fracture parameters shared by all regions.
class MaterialMap {
 public:
  MaterialMap(double youngs_modulus, double poisson_ratio, double fracture_toughness, double kappa);

  /// Overrides the Poisson ratio inside `box` (closed box test at points).
  void add_region(const Rect& box, double poisson_ratio);

  double youngs_modulus() const { return youngs_; }
  double fracture_toughness() const { return gc_; }
  double kappa() const { return kappa_; }

  double poisson_ratio_at(const Point& x) const;
  LocalMaterial at(const Point& x) const { return lame_parameters(youngs_, poisson_ratio_at(x)); }
  /// Material of each active cell, looked up at the cell centre.
  std::vector<LocalMaterial> per_cell(const QuadMesh& mesh) const;
  bool any_incompressible(const QuadMesh& mesh) const;

  /// Throws if a region boundary cuts through the interior of an active cell.
  void check_alignment(const QuadMesh& mesh) const;

 private:
  double youngs_;
  double nu_;
  double gc_;
  double kappa_;
  std::vector<std::pair<Rect, double>> regions_;
};

/// Prescribed crack pressure p_g: a constant or the product bump f(x) g(y).
class PressureField {
 public:
  static PressureField constant(double value);
  static PressureField bump();

  double value(const Point& x) const;
  Point gradient(const Point& x) const;
  bool is_constant() const { return !bump_; }

  static double bump_f(double x);
  static double bump_f_prime(double x);
  static double bump_g(double y);
  static double bump_g_prime(double y);

 private:
  bool bump_ = false;
  double constant_ = 0.0;
};

Tensor2 stress_primal(const Tensor2& strain, const LocalMaterial& mat);
Tensor2 stress_mixed(const Tensor2& strain, double p, const LocalMaterial& mat);
double degradation(double phi, double kappa);

/// Coefficients of one loading step, all in raw numbering of an FESystem.
struct SystemState {
  Vector u;         // [u_x | u_y]
  Vector p;         // per-cell P1 coefficients, empty for the primal form
  Vector phi;       // Q1 phase field
  Vector tau;       // nodal multiplier at Q1 nodes (zero at hanging nodes)
  Vector phi_prev;  // Q1 phase field of the previous step; the obstacle

  static SystemState zeros(const FESystem& fe);
  Vector pack(const FESystem& fe) const;
  void unpack(const FESystem& fe, const Vector& raw);
};

/// Sparse matrix over a block of the free numbering with a fixed pattern, filled by
/// adding local element contributions through the constraint expansion.
class CondensedAssembler {
 public:
  /// Rows [row_begin, row_end) and columns [col_begin, col_end) of the free numbering.
  CondensedAssembler(const FESystem& fe, std::size_t row_begin, std::size_t row_end, std::size_t col_begin,
                     std::size_t col_end);

  void zero();
  /// Adds the local matrix `k` (local raw dofs `dofs`) restricted to the block.
  void add_local(std::span<const int> dofs, const Eigen::MatrixXd& k, int local_row_begin, int local_row_end,
                 int local_col_begin, int local_col_end);
  const SparseMatrix& matrix() const { return matrix_; }
  SparseMatrix& matrix() { return matrix_; }

 private:
  void add(int row, int col, double value);

  const FESystem& fe_;
  std::size_t row_begin_;
  std::size_t row_end_;
  std::size_t col_begin_;
  std::size_t col_end_;
  SparseMatrix matrix_;
};

/// Condensed (u,p) system: residual R_up(x) = matrix * x + load. If `bordered`, the matrix has one
/// extra row/column enforcing a zero pressure mean (needed when every cell is incompressible
/// and the boundary is clamped, where the constant pressure is otherwise undetermined).
struct DisplacementSystem {
  SparseMatrix matrix;
  Vector load;
  bool bordered = false;
};

/// Condensed phase-field Newton blocks at one state.
struct PhaseSystem {
  SparseMatrix phi_phi;  // dR_phi/dphi on free phi dofs
  SparseMatrix phi_up;   // dR_phi/d(u,p) on free dofs
  Vector residual;       // condensed R_phi (without the multiplier)
};

/// Weak forms of the three discrete problems on one FESystem.
///
/// The displacement equation uses g(phi_prev) and phi_prev^2 (time lag), so it is linear in
/// (u,p) and independent of the current phi. The phase-field equation uses current u, p, phi.
class PhaseFieldModel {
 public:
  PhaseFieldModel(const FESystem& fe, const MaterialMap& material, const PressureField& pressure, double eps);

  const FESystem& fe() const { return fe_; }
  const MaterialMap& material() const { return material_; }
  const PressureField& pressure() const { return pressure_; }
  double eps() const { return eps_; }
  const LocalMaterial& cell_material(int cell) const { return cell_material_[cell]; }

  /// Raw residual [R_u | R_p | R_phi].
  Vector residual(const SystemState& s) const;
  /// Raw Jacobian d[R_u | R_p | R_phi] / d[u | p | phi].
  SparseMatrix jacobian(const SystemState& s) const;

  DisplacementSystem displacement_system(const Vector& phi_prev) const;
  PhaseSystem phase_system(const SystemState& s) const;

  /// Element kernel. Fills the local residual and/or Jacobian in local ordering
  /// [u_x | u_y | p | phi]; rows outside [row_begin,row_end) are skipped.
  struct LocalRequest {
    bool residual = true;
    bool jacobian = true;
    int row_begin = 0;
    int row_end = -1;
  };
  void local(int cell, const SystemState& s, const LocalRequest& req, Eigen::VectorXd& r, Eigen::MatrixXd& k) const;

 private:
  const FESystem& fe_;
  const MaterialMap& material_;
  const PressureField& pressure_;
  double eps_;
  Quadrature2D quad_;
  ShapeTable u_tab_;
  ShapeTable p_tab_;
  ShapeTable phi_tab_;
  std::optional<RTInterpolatedTable> rt_tab_;
  std::vector<LocalMaterial> cell_material_;
  mutable std::unique_ptr<CondensedAssembler> up_up_;
  mutable std::unique_ptr<CondensedAssembler> phi_phi_;
  mutable std::unique_ptr<CondensedAssembler> phi_up_;
};

Vector residual_primal(const SystemState& s, const FESystem& fe, const MaterialMap& mat, const PressureField& pg,
                       double eps);
Vector residual_mixed(const SystemState& s, const FESystem& fe, const MaterialMap& mat, const PressureField& pg,
                      double eps);
Vector residual_mixed_robust(const SystemState& s, const FESystem& fe, const MaterialMap& mat,
                             const PressureField& pg, double eps);
SparseMatrix jacobian(const SystemState& s, const FESystem& fe, const MaterialMap& mat, const PressureField& pg,
                      double eps);

}  // namespace fracfield
