#pragma once

#include <memory>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "fracfield/model.hpp"

namespace fracfield {

class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

struct SolverConfig {
  double newton_tolerance = 1e-10;  // Euclidean norm of the full nonlinear residual
  int max_newton_iterations = 200;  // the active set leaves the initial crack zone about one node layer per iteration
  double complementarity_c = 0.0;  // <= 0 selects G_c / eps
  int max_loading_steps = 10;
  double stagnation_tolerance = 1e-8;  // sup-norm change of phi between loading steps
  double backtrack_factor = 0.5;
  int max_backtracks = 10;
  std::ostream* log = nullptr;  // one line per Newton iteration when set

  void validate() const;
};

/// Sparse LU (UMFPACK) with the symbolic analysis kept while the pattern does not change.
class SparseDirectSolver {
 public:
  SparseDirectSolver();
  ~SparseDirectSolver();
  SparseDirectSolver(SparseDirectSolver&&) noexcept;
  SparseDirectSolver& operator=(SparseDirectSolver&&) noexcept;

  /// Factorizes; reuses the previous symbolic analysis if the sparsity pattern is unchanged.
  void factorize(const SparseMatrix& matrix);
  Vector solve(const Vector& rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot direct solve. Throws SingularMatrix on a failed factorization.
Vector linear_solve(const SparseMatrix& matrix, const Vector& rhs);

struct StepResult {
  SystemState state;
  int newton_steps = 0;
  double residual = 0.0;
  std::size_t active_nodes = 0;
};

struct LoadingResult {
  SystemState state;
  int newton_steps = 0;   // summed over loading steps
  int loading_steps = 0;
  bool stagnated = false;
};

/// Semismooth Newton for one loading step of a PhaseFieldModel.
///
/// The (u,p) equations do not depend on the current phi, so each iteration first solves them
/// (exactly, they are linear) and then takes a primal-dual active set step for the phase field
/// at the new displacement:
///   active set  A = { q : tau_q + c (phi_q - obstacle_q) > 0 },
///   phi = obstacle on A, tau = 0 off A, R_phi + tau = 0 everywhere.
/// The obstacle is phi_prev of the starting state. tau lives on the free Q1 nodes; hanging
/// nodes follow their masters and carry no multiplier.
class LoadingStepSolver {
 public:
  LoadingStepSolver(const PhaseFieldModel& model, SolverConfig cfg);
  ~LoadingStepSolver();

  StepResult solve(const SystemState& start, int step_index = 1);
  LoadingResult run(const Vector& phi0);

  const PhaseFieldModel& model() const { return model_; }
  const SolverConfig& config() const { return cfg_; }
  double complementarity_constant() const;

 private:
  const PhaseFieldModel& model_;
  SolverConfig cfg_;
  SparseDirectSolver displacement_lu_;
  SparseDirectSolver phase_lu_;
};

StepResult solve_loading_step(const SystemState& start, const PhaseFieldModel& model, const SolverConfig& cfg);
/// Repeats loading steps from phi0 (obstacle of the first step) until phi stagnates or the
/// step limit is reached.
LoadingResult run_loading_loop(const Vector& phi0, const PhaseFieldModel& model, const SolverConfig& cfg);

/// Complementarity diagnostics of a state in the free phase-field numbering.
struct KktReport {
  double stationarity = 0.0;    // max |R_phi + tau|
  double feasibility = 0.0;     // max (phi - obstacle)_+
  double sign = 0.0;            // max (-tau)_+
  double complementarity = 0.0; // max |tau (obstacle - phi)|
  double displacement = 0.0;    // max |R_up|
};
KktReport kkt_report(const PhaseFieldModel& model, const SystemState& s);

}  // namespace fracfield
