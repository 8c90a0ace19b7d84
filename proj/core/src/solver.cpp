#include "fracfield/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <Eigen/UmfPackSupport>

namespace fracfield {

namespace {

template <typename... Args>
std::string strf(const char* fmt, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(newton_tolerance > 0.0)) throw std::invalid_argument("SolverConfig: newton_tolerance must be positive");
  if (max_newton_iterations < 1) throw std::invalid_argument("SolverConfig: max_newton_iterations must be >= 1");
  if (max_loading_steps < 1) throw std::invalid_argument("SolverConfig: max_loading_steps must be >= 1");
  if (!(stagnation_tolerance > 0.0)) throw std::invalid_argument("SolverConfig: stagnation_tolerance must be positive");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw std::invalid_argument("SolverConfig: backtrack_factor must lie in (0,1)");
  }
  if (max_backtracks < 0) throw std::invalid_argument("SolverConfig: max_backtracks must be >= 0");
}

// ---------------------------------------------------------------------------------------------

struct SparseDirectSolver::Impl {
  // 64-bit indices: the 32-bit interface caps the factor workspace at 2^31 entries
  using LongMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, SuiteSparse_long>;
  LongMatrix matrix;  // UMFPACK keeps pointers into the factorized matrix
  Eigen::UmfPackLU<LongMatrix> lu;
  bool analyzed = false;
};

SparseDirectSolver::SparseDirectSolver() : impl_(std::make_unique<Impl>()) {
  // The saddle-point systems at nu = 0.5 have a zero pressure block; UMFPACK's automatic
  // choice then switches to the unsymmetric strategy, which fills in an order of magnitude more.
  impl_->lu.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
  impl_->lu.umfpackControl()(UMFPACK_ORDERING) = UMFPACK_ORDERING_AMD;
}
SparseDirectSolver::~SparseDirectSolver() = default;
SparseDirectSolver::SparseDirectSolver(SparseDirectSolver&&) noexcept = default;
SparseDirectSolver& SparseDirectSolver::operator=(SparseDirectSolver&&) noexcept = default;

namespace {

template <typename A, typename B>
bool same_pattern(const A& a, const B& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  if (!a.isCompressed() || !b.isCompressed()) return false;
  return std::equal(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1, b.outerIndexPtr()) &&
         std::equal(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros(), b.innerIndexPtr());
}

}  // namespace

void SparseDirectSolver::factorize(const SparseMatrix& matrix) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("SparseDirectSolver: matrix is not square");
  const bool reuse = impl_->analyzed && same_pattern(impl_->matrix, matrix);
  impl_->matrix = matrix;
  impl_->matrix.makeCompressed();
  if (!reuse) {
    impl_->lu.analyzePattern(impl_->matrix);
    if (impl_->lu.info() != Eigen::Success) {
      impl_->analyzed = false;
      throw SingularMatrix("symbolic factorization failed");
    }
    impl_->analyzed = true;
  }
  impl_->lu.factorize(impl_->matrix);
  if (impl_->lu.info() != Eigen::Success) {
    const int code = impl_->lu.umfpackFactorizeReturncode();
    throw SingularMatrix(strf("LU factorization failed for a %ldx%ld matrix (%s, umfpack status %d)",
                              static_cast<long>(matrix.rows()), static_cast<long>(matrix.cols()),
                              code == UMFPACK_ERROR_out_of_memory ? "out of memory" : "singular or zero pivot",
                              code));
  }
}

Vector SparseDirectSolver::solve(const Vector& rhs) const {
  Vector x = impl_->lu.solve(rhs);
  if (impl_->lu.info() != Eigen::Success || !x.allFinite()) throw SingularMatrix("direct solve failed");
  return x;
}

Vector linear_solve(const SparseMatrix& matrix, const Vector& rhs) {
  SparseDirectSolver s;
  s.factorize(matrix);
  return s.solve(rhs);
}

// ---------------------------------------------------------------------------------------------

namespace {

// Free phase-field dofs as positions in the raw phi block.
std::vector<int> free_phi_positions(const FESystem& fe) {
  const int nup = static_cast<int>(fe.n_free_up());
  const int off = static_cast<int>(fe.raw_offset_phi());
  std::vector<int> pos(fe.n_free_phi());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = fe.raw_index(nup + static_cast<int>(i)) - off;
  return pos;
}

Vector gather(const Vector& raw, const std::vector<int>& pos) {
  Vector out(static_cast<int>(pos.size()));
  for (std::size_t i = 0; i < pos.size(); ++i) out[static_cast<int>(i)] = raw[pos[i]];
  return out;
}

struct Merit {
  double c;
  const Vector& obstacle;

  // || (R_phi + tau, tau - max(0, tau + c (phi - obstacle))) ||
  double phase(const Vector& r, const Vector& phi, const Vector& tau) const {
    double sum = 0.0;
    for (int i = 0; i < r.size(); ++i) {
      const double g = r[i] + tau[i];
      const double comp = tau[i] - std::max(0.0, tau[i] + c * (phi[i] - obstacle[i]));
      sum += g * g + comp * comp;
    }
    return sum;
  }
};

// Copies `d` and replaces the rows and columns of active dofs by identity rows, keeping the
// sparsity pattern so the symbolic factorization can be reused.
void eliminate_active(const SparseMatrix& d, const std::vector<char>& active, SparseMatrix& out) {
  out = d;
  for (int j = 0; j < out.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(out, j); it; ++it) {
      if (active[j] || active[it.row()]) it.valueRef() = (it.row() == j && active[j]) ? 1.0 : 0.0;
    }
  }
}

}  // namespace

LoadingStepSolver::LoadingStepSolver(const PhaseFieldModel& model, SolverConfig cfg)
    : model_(model), cfg_(std::move(cfg)) {
  cfg_.validate();
}

LoadingStepSolver::~LoadingStepSolver() = default;

double LoadingStepSolver::complementarity_constant() const {
  return cfg_.complementarity_c > 0.0 ? cfg_.complementarity_c
                                      : model_.material().fracture_toughness() / model_.eps();
}

StepResult LoadingStepSolver::solve(const SystemState& start, int step_index) {
  const FESystem& fe = model_.fe();
  const int nup = static_cast<int>(fe.n_free_up());
  const int nphi = static_cast<int>(fe.n_free_phi());
  const double c = complementarity_constant();
  const std::vector<int> pos = free_phi_positions(fe);

  SystemState s = start;
  const Vector obstacle = gather(s.phi_prev, pos);
  Vector phi = gather(s.phi, pos);
  Vector tau = gather(s.tau, pos);
  std::vector<double> history;

  // (u,p): linear with a matrix fixed by phi_prev
  const DisplacementSystem ds = model_.displacement_system(s.phi_prev);
  displacement_lu_.factorize(ds.matrix);
  const Vector x = displacement_lu_.solve(-ds.load);
  const double r_up = (ds.matrix * x + ds.load).squaredNorm();

  Vector free(static_cast<int>(fe.n_free()));
  free.head(nup) = x.head(nup);
  free.tail(nphi) = phi;
  s.unpack(fe, fe.expand(free));

  // phi: R_phi(phi) = r0 + D (phi - phi0), exactly, at the new displacement
  const PhaseSystem ps = model_.phase_system(s);
  const SparseMatrix& d = ps.phi_phi;
  const Vector phi0 = phi;
  auto phase_residual = [&](const Vector& p) -> Vector { return ps.residual + d * (p - phi0); };

  const Merit merit{c, obstacle};
  Vector r = ps.residual;
  double m2 = r_up + merit.phase(r, phi, tau);
  history.push_back(std::sqrt(m2));

  std::vector<char> active(nphi, 0);
  SparseMatrix reduced;
  int it = 0;
  std::size_t n_active = 0;
  while (std::sqrt(m2) > cfg_.newton_tolerance) {
    if (it == cfg_.max_newton_iterations) {
      throw NonConvergence(strf("loading step %d: no convergence in %d Newton iterations (residual %.3e)", step_index, it,
                                std::sqrt(m2)),
                           history);
    }
    ++it;
    n_active = 0;
    Vector dphi = Vector::Zero(nphi);
    for (int i = 0; i < nphi; ++i) {
      active[i] = tau[i] + c * (phi[i] - obstacle[i]) > 0.0;
      if (active[i]) {
        dphi[i] = obstacle[i] - phi[i];
        ++n_active;
      }
    }
    Vector rhs = -(r + d * dphi);
    for (int i = 0; i < nphi; ++i) {
      if (active[i]) rhs[i] = dphi[i];
    }
    eliminate_active(d, active, reduced);
    phase_lu_.factorize(reduced);
    dphi = phase_lu_.solve(rhs);

    const Vector r_full = r + d * dphi;
    Vector tau_new = Vector::Zero(nphi);
    for (int i = 0; i < nphi; ++i) {
      if (active[i]) tau_new[i] = -r_full[i];
    }
    const Vector dtau = tau_new - tau;

    // backtracking on the residual norm; the full step is kept if no trial decreases it
    double alpha = 1.0;
    double best = merit.phase(phase_residual(phi + dphi), phi + dphi, tau + dtau) + r_up;
    for (int k = 0; k < cfg_.max_backtracks && !(best < m2); ++k) {
      alpha *= cfg_.backtrack_factor;
      const Vector trial = phi + alpha * dphi;
      best = merit.phase(phase_residual(trial), trial, tau + alpha * dtau) + r_up;
    }
    if (!(best < m2)) {
      alpha = 1.0;
      best = merit.phase(phase_residual(phi + dphi), phi + dphi, tau + dtau) + r_up;
    }
    phi += alpha * dphi;
    tau += alpha * dtau;
    r = phase_residual(phi);
    m2 = best;
    history.push_back(std::sqrt(m2));
    if (cfg_.log) {
      *cfg_.log << strf("step %3d  newton %3d  residual %.6e  active %zu  alpha %g\n", step_index, it, std::sqrt(m2),
                          n_active, alpha);
    }
  }

  free.tail(nphi) = phi;
  s.unpack(fe, fe.expand(free));
  s.tau.setZero();
  for (int i = 0; i < nphi; ++i) s.tau[pos[i]] = tau[i];

  StepResult out;
  out.state = std::move(s);
  out.newton_steps = std::max(it, 1);
  out.residual = std::sqrt(m2);
  n_active = 0;
  for (int i = 0; i < nphi; ++i) n_active += tau[i] + c * (phi[i] - obstacle[i]) > 0.0;
  out.active_nodes = n_active;
  return out;
}

LoadingResult LoadingStepSolver::run(const Vector& phi0) {
  const FESystem& fe = model_.fe();
  if (phi0.size() != static_cast<int>(fe.n_phi())) throw std::invalid_argument("run_loading_loop: phi0 has wrong size");
  SystemState s = SystemState::zeros(fe);
  s.phi = phi0;
  s.phi_prev = phi0;
  LoadingResult out;
  for (int n = 1; n <= cfg_.max_loading_steps; ++n) {
    StepResult step = solve(s, n);
    out.newton_steps += step.newton_steps;
    out.loading_steps = n;
    const double change = (step.state.phi - s.phi_prev).cwiseAbs().maxCoeff();
    s = std::move(step.state);
    if (cfg_.log) *cfg_.log << strf("step %3d  phi change %.6e\n", n, change);
    if (change < cfg_.stagnation_tolerance) {
      out.stagnated = true;
      break;
    }
    if (n < cfg_.max_loading_steps) s.phi_prev = s.phi;
  }
  out.state = std::move(s);
  return out;
}

StepResult solve_loading_step(const SystemState& start, const PhaseFieldModel& model, const SolverConfig& cfg) {
  LoadingStepSolver solver(model, cfg);
  return solver.solve(start);
}

LoadingResult run_loading_loop(const Vector& phi0, const PhaseFieldModel& model, const SolverConfig& cfg) {
  LoadingStepSolver solver(model, cfg);
  return solver.run(phi0);
}

KktReport kkt_report(const PhaseFieldModel& model, const SystemState& s) {
  const FESystem& fe = model.fe();
  const std::vector<int> pos = free_phi_positions(fe);
  const Vector obstacle = gather(s.phi_prev, pos);
  const Vector phi = gather(s.phi, pos);
  const Vector tau = gather(s.tau, pos);
  const PhaseSystem ps = model.phase_system(s);
  KktReport k;
  for (int i = 0; i < phi.size(); ++i) {
    k.stationarity = std::max(k.stationarity, std::abs(ps.residual[i] + tau[i]));
    k.feasibility = std::max(k.feasibility, phi[i] - obstacle[i]);
    k.sign = std::max(k.sign, -tau[i]);
    k.complementarity = std::max(k.complementarity, std::abs(tau[i] * (obstacle[i] - phi[i])));
  }
  const DisplacementSystem ds = model.displacement_system(s.phi_prev);
  Vector x = Vector::Zero(ds.matrix.rows());
  x.head(static_cast<int>(fe.n_free_up())) = fe.restrict_to_free(s.pack(fe)).head(static_cast<int>(fe.n_free_up()));
  Vector r = ds.matrix * x + ds.load;
  if (ds.bordered) r.conservativeResize(r.size() - 1);
  k.displacement = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  return k;
}

}  // namespace fracfield
