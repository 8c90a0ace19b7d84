#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "acceptance.hpp"
#include "fracfield/bench.hpp"
#include "fracfield/estimator.hpp"
#include "fracfield/rt.hpp"
#include "oracles.hpp"

namespace fracfield::acceptance {

namespace {

using namespace fracfield::oracle;

std::string sf(const char* fmt, double a, double b) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

std::shared_ptr<const QuadMesh> shared(QuadMesh m) { return std::make_shared<const QuadMesh>(std::move(m)); }

// Two refinement steps give hanging nodes on faces of different sizes.
std::shared_ptr<const QuadMesh> graded_mesh() {
  QuadMesh m = QuadMesh::build_uniform({-1.0, -1.0, 2.0, 1.0}, 3, 2);
  m = m.refine(std::vector<CellId>{m.cell_id(m.find_active({0.5, 0.5}))});
  m = m.refine(std::vector<CellId>{m.cell_id(m.find_active({0.3, 0.3}))});
  return shared(std::move(m));
}

struct Item {
  std::string text;
  bool ok;
};

// Directional central differences of the raw residual on a 2x2 mesh under the bump load.
Item jacobian_check() {
  const auto mesh = shared(QuadMesh::build_uniform({0.0, -1.0, 2.0, 1.0}, 2, 2));
  const PressureField pg = PressureField::bump();
  double worst = 0.0;
  for (FormKind form : {FormKind::Primal, FormKind::Mixed, FormKind::MixedRobust}) {
    const FESystem fe(mesh, form);
    MaterialMap mat(1.0, 0.2, 1.0, 1e-8);
    mat.add_region({0.0, -1.0, 1.0, 1.0}, form == FormKind::Primal ? 0.45 : 0.5);
    const PhaseFieldModel model(fe, mat, pg, 0.7);
    const SystemState s = raw_random_state(fe, 21);
    const Vector x0 = s.pack(fe);
    const SparseMatrix j = model.jacobian(s);
    std::mt19937 rng(5);
    std::normal_distribution<double> n01;
    for (int dir = 0; dir < 4; ++dir) {
      Vector v(x0.size());
      for (int i = 0; i < v.size(); ++i) v[i] = n01(rng);
      const double h = 1e-6;
      SystemState t = s;
      t.unpack(fe, x0 + h * v);
      const Vector rp = model.residual(t);
      t.unpack(fe, x0 - h * v);
      const Vector rm = model.residual(t);
      const Vector fd = (rp - rm) / (2 * h);
      worst = std::max(worst, (j * v - fd).norm() / fd.norm());
    }
  }
  return {sf("Jacobian vs central differences %.2e <= %.0e", worst, 1e-6), worst <= 1e-6};
}

Item rt_divergence_check() {
  const auto mesh = graded_mesh();
  const ScalarDofHandler q2(*mesh, 2);
  const RTSpace rt(mesh);
  std::mt19937 rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const Vector ux = constrained_random(q2, rng, -1, 1);
    const Vector uy = constrained_random(q2, rng, -1, 1);
    const Vector c = interpolate_rt(rt, q2, ux, uy);
    for (std::size_t k = 0; k < mesh->n_active(); ++k) {
      const int cell = static_cast<int>(k);
      const Rect b = mesh->cell_box(cell);
      double div_v = 0.0, div_rt = 0.0;
      for (int i = 0; i < 3; ++i) {
        for (int jj = 0; jj < 3; ++jj) {
          const Point x = physical(b, {kGaussX[i], kGaussX[jj]});
          const double w = kGaussW[i] * kGaussW[jj] * b.area();
          div_v += w * (evaluate_gradient_on_cell(*mesh, q2, ux, cell, x).x() +
                        evaluate_gradient_on_cell(*mesh, q2, uy, cell, x).y());
          div_rt += w * rt.divergence(c, cell, x);
        }
      }
      worst = std::max(worst, std::abs(div_rt - div_v));
    }
  }
  return {sf("RT cell divergence means %.2e <= %.0e", worst, 1e-10), worst <= 1e-10};
}

Item trace_check() {
  const auto mesh = graded_mesh();
  std::mt19937 rng(13);
  double worst = 0.0;
  for (int degree : {1, 2}) {
    const ScalarDofHandler h(*mesh, degree);
    worst = std::max(worst, max_trace_gap(*mesh, h, constrained_random(h, rng, -1, 1)));
  }
  return {sf("hanging-node trace jumps %.2e <= %.0e", worst, 1e-12), worst <= 1e-12};
}

// Converged small crack problems of every form; the observer sees the final state of each level.
Item kkt_check() {
  double worst = 0.0;
  double tol = 0.0;
  const std::pair<const char*, double> runs[] = {{"1a", 0.2}, {"2b", 0.5}, {"3b", 0.5}};
  for (const auto& [example, nu] : runs) {
    ExperimentConfig cfg;
    cfg.example = example;
    cfg.nu = {nu};
    cfg.cell_side = 2.0;
    cfg.prerefine_rounds = 1;
    cfg.prerefine_zone = {-2.0, -2.0, 2.0, 2.0};
    cfg.d0 = 0.5;
    cfg.policy.levels = 0;
    tol = cfg.solver.newton_tolerance;
    run_experiment(cfg, [&](const LevelResult& r) {
      const KktReport k = kkt_report(r.model, r.state);
      worst = std::max({worst, k.stationarity, k.feasibility, k.sign, k.complementarity, k.displacement});
    });
  }
  return {sf("KKT residuals at convergence %.2e <= %.0e", worst, tol), worst <= tol};
}

Item zero_state_check() {
  const auto mesh = graded_mesh();
  const FESystem fe(mesh, FormKind::Mixed);
  const MaterialMap mat(1.0, 0.3, 1.0, 1e-8);
  const PhaseFieldModel model(fe, mat, PressureField::constant(0.0), 0.5);
  SystemState s = SystemState::zeros(fe);
  s.phi.setOnes();
  s.phi_prev.setConstant(2.0);
  const EstimatorReport r = estimate(model, s);
  const double eta = std::max({std::abs(r.eta_total), std::abs(r.eta1), std::abs(r.eta2), std::abs(r.eta3),
                               std::abs(r.eta4)});
  return {sf("eta on the unloaded unconstrained state %.2e == %g", eta, 0.0), eta == 0.0};
}

// a(zeta, psi), the interior residual and the constraining force against integrands written out here.
Item estimator_oracle_check() {
  const auto mesh = graded_mesh();
  const double gc = 1.3, kappa = 1e-3, eps = 0.8;
  const MaterialMap mat(1.0, 0.3, gc, kappa);
  const PressureField pg = PressureField::bump();
  auto pgv = [](const Point& x) { return PressureField::bump_f(x.x()) * PressureField::bump_g(x.y()); };
  auto gpg = [](const Point& x) {
    return Point(PressureField::bump_f_prime(x.x()) * PressureField::bump_g(x.y()),
                 PressureField::bump_f(x.x()) * PressureField::bump_g_prime(x.y()));
  };
  double worst = 0.0;
  for (FormKind form : {FormKind::Primal, FormKind::Mixed}) {
    const FESystem fe(mesh, form);
    const PhaseFieldModel model(fe, mat, pg, eps);
    const SystemState s = random_state(fe, 31);
    std::mt19937 rng(2);
    const Vector zeta = constrained_random(fe.phase_dofs(), rng, -1, 1);
    const Vector psi = constrained_random(fe.phase_dofs(), rng, -1, 1);
    auto a_oracle = [&](const Vector& z, const Vector& p) {
      return integral(model, s, z, p, [&](int c, const Point& x, const Fields& f) {
        return gc / eps * f.zeta * f.psi + (1 - kappa) * work(model, c, f) * f.zeta * f.psi +
               2 * pgv(x) * f.gu.trace() * f.zeta * f.psi + 2 * gpg(x).dot(f.u) * f.zeta * f.psi +
               gc * eps * f.gzeta.dot(f.gpsi);
      });
    };
    const double a_ref = a_oracle(zeta, psi);
    worst = std::max(worst, std::abs(bilinear_form(model, s, zeta, psi) - a_ref) / std::abs(a_ref));

    // r(phi_h) at the tensor Gauss points of every cell
    const Vector ux = s.u.head(static_cast<int>(fe.n_u_component()));
    const Vector uy = s.u.tail(static_cast<int>(fe.n_u_component()));
    for (std::size_t k = 0; k < mesh->n_active(); ++k) {
      const int c = static_cast<int>(k);
      const auto r = interior_residual(model, s, c);
      const Rect b = mesh->cell_box(c);
      for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < 3; ++i) {
          const Point ref(kGaussX[i], kGaussX[j]);
          const Point x = physical(b, ref);
          Fields f;
          f.phi = evaluate_on_cell(*mesh, fe.phase_dofs(), s.phi, c, x);
          f.u = {evaluate_on_cell(*mesh, fe.displacement_dofs(), ux, c, x),
                 evaluate_on_cell(*mesh, fe.displacement_dofs(), uy, c, x)};
          f.gu.row(0) = evaluate_gradient_on_cell(*mesh, fe.displacement_dofs(), ux, c, x).transpose();
          f.gu.row(1) = evaluate_gradient_on_cell(*mesh, fe.displacement_dofs(), uy, c, x).transpose();
          if (fe.has_pressure()) {
            f.p = s.p[3 * c] + s.p[3 * c + 1] * (2 * ref.x() - 1) + s.p[3 * c + 2] * (2 * ref.y() - 1);
          }
          const double want = gc / eps - gc / eps * f.phi - (1 - kappa) * work(model, c, f) * f.phi -
                              2 * pgv(x) * f.gu.trace() * f.phi - 2 * gpg(x).dot(f.u) * f.phi;
          worst = std::max(worst, std::abs(r[3 * j + i] - want) / (1 + std::abs(want)));
        }
      }
    }

    // <Lambda_h, phi_q> = G_c/eps (1, phi_q) - a(phi_h, phi_q), node by node
    const Vector forces = constraining_force(model, s);
    const ScalarDofHandler& pd = fe.phase_dofs();
    double force_gap = 0.0, force_scale = 0.0;
    for (std::size_t q = 0; q < pd.n_dofs(); ++q) {
      if (pd.is_constrained(static_cast<int>(q))) continue;
      Vector basis = Vector::Zero(static_cast<int>(pd.n_dofs()));
      basis[static_cast<int>(q)] = 1.0;
      for (std::size_t h = 0; h < pd.n_dofs(); ++h) {
        if (!pd.is_constrained(static_cast<int>(h))) continue;
        for (const auto& e : pd.constraint(static_cast<int>(h))) {
          if (e.index == static_cast<int>(q)) basis[static_cast<int>(h)] += e.weight;
        }
      }
      const Vector one = Vector::Ones(basis.size());
      const double mass = integral(model, s, one, basis, [](int, const Point&, const Fields& f) { return f.psi; });
      const double want = gc / eps * mass - a_oracle(s.phi, basis);
      force_gap = std::max(force_gap, std::abs(forces[static_cast<int>(q)] - want));
      force_scale = std::max(force_scale, std::abs(want));
    }
    worst = std::max(worst, force_gap / force_scale);
  }
  return {sf("estimator terms vs oracle %.2e <= %.0e", worst, 1e-12), worst <= 1e-12};
}

}  // namespace

Outcome criterion_8() {
  Outcome o{8, "property suites", true, {}};
  for (auto check : {jacobian_check, rt_divergence_check, trace_check, kkt_check, zero_state_check,
                     estimator_oracle_check}) {
    Item item;
    try {
      item = check();
    } catch (const std::exception& e) {
      item = {std::string("exception: ") + e.what(), false};
    }
    o.passed = o.passed && item.ok;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += (item.ok ? "" : "FAILED ") + item.text;
  }
  return o;
}

}  // namespace fracfield::acceptance
