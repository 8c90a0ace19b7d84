#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fracfield/estimator.hpp"
#include "fracfield/solver.hpp"
#include "oracles.hpp"

using namespace fracfield;
using namespace fracfield::oracle;

namespace {

std::shared_ptr<const QuadMesh> test_mesh() {
  QuadMesh m = QuadMesh::build_uniform({-2.0, -2.0, 2.0, 2.0}, 4, 4);
  m = m.refine(std::vector<CellId>{m.cell_id(m.find_active({0.5, 0.5}))});
  return std::make_shared<const QuadMesh>(std::move(m));
}

struct Fixture {
  std::shared_ptr<const QuadMesh> mesh = test_mesh();
  MaterialMap mat{1.0, 0.3, 1.3, 1e-3};
  PressureField pg = PressureField::bump();
  double eps = 0.8;
};

class EstimatorOracle : public ::testing::TestWithParam<FormKind> {};

}  // namespace

TEST_P(EstimatorOracle, BilinearFormMatchesTermByTerm) {
  Fixture fx;
  const FESystem fe(fx.mesh, GetParam());
  const PhaseFieldModel model(fe, fx.mat, fx.pg, fx.eps);
  const SystemState s = random_state(fe, 4);
  std::mt19937 rng(9);
  const Vector zeta = constrained_random(fe.phase_dofs(), rng, -1, 1);
  const Vector psi = constrained_random(fe.phase_dofs(), rng, -1, 1);
  const double gc = 1.3, kappa = 1e-3;
  const double oracle = integral(model, s, zeta, psi, [&](int c, const Point& x, const Fields& f) {
    const double pgv = PressureField::bump_f(x.x()) * PressureField::bump_g(x.y());
    const Point gpg(PressureField::bump_f_prime(x.x()) * PressureField::bump_g(x.y()),
                    PressureField::bump_f(x.x()) * PressureField::bump_g_prime(x.y()));
    return gc / fx.eps * f.zeta * f.psi + (1 - kappa) * work(model, c, f) * f.zeta * f.psi +
           2 * pgv * f.gu.trace() * f.zeta * f.psi + 2 * gpg.dot(f.u) * f.zeta * f.psi +
           gc * fx.eps * f.gzeta.dot(f.gpsi);
  });
  const double a = bilinear_form(model, s, zeta, psi);
  EXPECT_NEAR(a, oracle, 1e-12 * std::abs(oracle));
  EXPECT_NEAR(bilinear_form(model, s, psi, zeta), a, 1e-12 * std::abs(a));
  EXPECT_EQ(bilinear_form(model, s, Vector::Zero(zeta.size()), psi), 0.0);
}

TEST_P(EstimatorOracle, InteriorResidualMatchesTermByTerm) {
  Fixture fx;
  const FESystem fe(fx.mesh, GetParam());
  const PhaseFieldModel model(fe, fx.mat, fx.pg, fx.eps);
  const SystemState s = random_state(fe, 5);
  const QuadMesh& mesh = *fx.mesh;
  const double gc = 1.3, kappa = 1e-3;
  const Vector ux = s.u.head(static_cast<int>(fe.n_u_component()));
  const Vector uy = s.u.tail(static_cast<int>(fe.n_u_component()));
  for (std::size_t k = 0; k < mesh.n_active(); ++k) {
    const int c = static_cast<int>(k);
    const auto r = interior_residual(model, s, c);
    const Rect b = mesh.cell_box(c);
    for (int j = 0; j < 3; ++j) {
      for (int i = 0; i < 3; ++i) {
        const Point ref(kGaussX[i], kGaussX[j]);
        const Point x(b.x0 + ref.x() * b.width(), b.y0 + ref.y() * b.height());
        Fields f;
        f.phi = evaluate_on_cell(mesh, fe.phase_dofs(), s.phi, c, x);
        f.u = {evaluate_on_cell(mesh, fe.displacement_dofs(), ux, c, x),
               evaluate_on_cell(mesh, fe.displacement_dofs(), uy, c, x)};
        f.gu.row(0) = evaluate_gradient_on_cell(mesh, fe.displacement_dofs(), ux, c, x).transpose();
        f.gu.row(1) = evaluate_gradient_on_cell(mesh, fe.displacement_dofs(), uy, c, x).transpose();
        f.p = fe.has_pressure()
                  ? s.p[3 * c] + s.p[3 * c + 1] * (2 * ref.x() - 1) + s.p[3 * c + 2] * (2 * ref.y() - 1)
                  : 0.0;
        const double pgv = PressureField::bump_f(x.x()) * PressureField::bump_g(x.y());
        const Point gpg(PressureField::bump_f_prime(x.x()) * PressureField::bump_g(x.y()),
                        PressureField::bump_f(x.x()) * PressureField::bump_g_prime(x.y()));
        const double oracle = gc / fx.eps - gc / fx.eps * f.phi - (1 - kappa) * work(model, c, f) * f.phi -
                              2 * pgv * f.gu.trace() * f.phi - 2 * gpg.dot(f.u) * f.phi;
        EXPECT_NEAR(r[3 * j + i], oracle, 1e-12 * (1 + std::abs(oracle)));
      }
    }
  }
}

TEST_P(EstimatorOracle, ConstrainingForceConsistency) {
  Fixture fx;
  const FESystem fe(fx.mesh, GetParam());
  const PhaseFieldModel model(fe, fx.mat, fx.pg, fx.eps);
  const SystemState s = random_state(fe, 6);
  const Vector forces = constraining_force(model, s);
  const Vector one = Vector::Ones(static_cast<int>(fe.n_phi()));
  const double lhs = forces.sum();
  const double rhs = 1.3 / fx.eps * 16.0 - bilinear_form(model, s, s.phi, one);
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(rhs));
  for (int i = 0; i < forces.size(); ++i) {
    if (fe.phase_dofs().is_constrained(i)) EXPECT_EQ(forces[i], 0.0);
  }
}

TEST_P(EstimatorOracle, EnergyNormMatchesTermByTerm) {
  Fixture fx;
  fx.pg = PressureField::constant(0.0);
  const FESystem fe(fx.mesh, GetParam());
  const PhaseFieldModel model(fe, fx.mat, fx.pg, fx.eps);
  const SystemState s = random_state(fe, 7);
  std::mt19937 rng(3);
  const Vector zeta = constrained_random(fe.phase_dofs(), rng, -1, 1);
  const double oracle = integral(model, s, zeta, zeta, [&](int c, const Point&, const Fields& f) {
    return 1.3 * fx.eps * f.gzeta.squaredNorm() + (1.3 / fx.eps + (1 - 1e-3) * work(model, c, f)) * f.zeta * f.zeta;
  });
  EXPECT_NEAR(energy_norm(model, s, zeta), std::sqrt(oracle), 1e-12 * std::sqrt(oracle));
  EXPECT_EQ(energy_norm(model, s, Vector::Zero(zeta.size())), 0.0);
}

INSTANTIATE_TEST_SUITE_P(Forms, EstimatorOracle, ::testing::Values(FormKind::Primal, FormKind::Mixed),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Estimator, SimpleResidualValues) {
  Fixture fx;
  fx.pg = PressureField::constant(0.0);
  const FESystem fe(fx.mesh, FormKind::Primal);
  const PhaseFieldModel model(fe, fx.mat, fx.pg, fx.eps);
  SystemState s = SystemState::zeros(fe);
  s.phi.setOnes();
  for (double r : interior_residual(model, s, 0)) EXPECT_EQ(r, 0.0);
  s.phi.setZero();
  for (double r : interior_residual(model, s, 3)) EXPECT_DOUBLE_EQ(r, 1.3 / fx.eps);

  // fully broken, unloaded: the force is G_c/eps times the integral of each basis function
  const Vector forces = constraining_force(model, s);
  const Vector hat_integrals = fe.condense(model.residual(SystemState::zeros(fe)));  // = -G_c/eps (1, phi_q)
  for (std::size_t i = fe.n_free_up(); i < fe.n_free(); ++i) {
    const int raw = fe.raw_index(static_cast<int>(i)) - static_cast<int>(fe.raw_offset_phi());
    EXPECT_NEAR(forces[raw], -hat_integrals[static_cast<int>(i)], 1e-14);
    EXPECT_GT(forces[raw], 0.0);
  }
}

TEST(Estimator, ZeroOnExactUnconstrainedState) {
  Fixture fx;
  fx.pg = PressureField::constant(0.0);
  const FESystem fe(fx.mesh, FormKind::Primal);
  const PhaseFieldModel model(fe, fx.mat, fx.pg, fx.eps);
  SystemState s = SystemState::zeros(fe);
  s.phi.setOnes();
  s.phi_prev.setConstant(2.0);  // nowhere in contact
  const EstimatorReport r = estimate(model, s);
  for (NodeClass c : r.node_class) EXPECT_EQ(c, NodeClass::Free);
  EXPECT_EQ(r.eta1, 0.0);
  EXPECT_EQ(r.eta2, 0.0);
  EXPECT_EQ(r.eta3, 0.0);
  EXPECT_EQ(r.eta4, 0.0);
  EXPECT_EQ(r.eta_total, 0.0);
}

TEST(Estimator, LinearPhaseFieldHasNoJumps) {
  Fixture fx;
  fx.pg = PressureField::constant(0.0);
  const FESystem fe(fx.mesh, FormKind::Primal);
  const PhaseFieldModel model(fe, fx.mat, fx.pg, fx.eps);
  SystemState s = SystemState::zeros(fe);
  s.phi = interpolate_nodal(fe.phase_dofs(), [](const Point& x) { return 0.5 + 0.1 * x.x() - 0.05 * x.y(); });
  s.phi_prev.setConstant(2.0);
  const EstimatorReport r = estimate(model, s);
  EXPECT_LE(r.eta2, 1e-14);
  EXPECT_GT(r.eta3, 0.0);  // the normal flux on the boundary does not vanish
  EXPECT_GT(r.eta1, 0.0);
}

TEST(Estimator, ClassificationOnConstructedFixture) {
  // 4x4 unit cells; contact at the centre node (2,2) and its 8 neighbours
  const auto mesh = std::make_shared<const QuadMesh>(QuadMesh::build_uniform({0, 0, 4, 4}, 4, 4));
  const FESystem fe(mesh, FormKind::Primal);
  const MaterialMap mat(1.0, 0.2, 1.0, 1e-8);
  const PressureField pg = PressureField::constant(0.0);
  const PhaseFieldModel model(fe, mat, pg, 1.0);
  SystemState s = SystemState::zeros(fe);
  s.phi_prev.setConstant(0.5);
  s.phi.setConstant(0.3);
  auto node_at = [&](double x, double y) {
    for (std::size_t q = 0; q < mesh->n_nodes(); ++q) {
      if ((mesh->node(static_cast<NodeId>(q)) - Point(x, y)).norm() < 1e-12) return static_cast<int>(q);
    }
    throw std::logic_error("no node at point");
  };
  for (int i = 1; i <= 3; ++i) {
    for (int j = 1; j <= 3; ++j) s.phi[node_at(i, j)] = 0.5;
  }
  Vector forces = Vector::Ones(static_cast<int>(fe.n_phi()));
  auto classes = classify_nodes(model, s, forces);
  for (std::size_t q = 0; q < mesh->n_nodes(); ++q) {
    const Point x = mesh->node(static_cast<NodeId>(q));
    const bool inner = x.x() >= 1 && x.x() <= 3 && x.y() >= 1 && x.y() <= 3;
    const NodeClass expected =
        (x.x() == 2 && x.y() == 2) ? NodeClass::FullContact : (inner ? NodeClass::SemiContact : NodeClass::Free);
    EXPECT_EQ(classes[q], expected) << x.transpose();
  }
  // a negative force anywhere in the patch demotes the centre to semi-contact
  forces[node_at(3, 3)] = -1.0;
  classes = classify_nodes(model, s, forces);
  EXPECT_EQ(classes[node_at(2, 2)], NodeClass::SemiContact);
}

TEST(Estimator, ReportInvariantsOnSolvedCrack) {
  QuadMesh m = QuadMesh::build_uniform({-4.0, -4.0, 4.0, 4.0}, 16, 16);
  std::vector<CellId> marked;
  for (std::size_t k = 0; k < m.n_active(); ++k) {
    const Point c = m.cell_center(static_cast<int>(k));
    if (std::abs(c.x()) < 2.0 && std::abs(c.y()) < 1.0) marked.push_back(m.cell_id(static_cast<int>(k)));
  }
  const auto mesh = std::make_shared<const QuadMesh>(m.refine(marked));
  const double d = 0.25;
  const FESystem fe(mesh, FormKind::Primal);
  const MaterialMap mat(1.0, 0.2, 1.0, 1e-8);
  const PressureField pg = PressureField::constant(1e-3);
  const double eps = 4 * std::sqrt(2.0) * d;
  const PhaseFieldModel model(fe, mat, pg, eps);
  const Vector phi0 = interpolate_nodal(fe.phase_dofs(), [d](const Point& x) {
    return (std::abs(x.x()) <= 1.0 + 1e-12 && std::abs(x.y()) <= d + 1e-12) ? 0.0 : 1.0;
  });
  const LoadingResult res = run_loading_loop(phi0, model, {});
  const EstimatorReport r = estimate(model, res.state);

  double sq[4] = {0, 0, 0, 0};
  std::size_t semi = 0, full = 0;
  for (std::size_t q = 0; q < r.node_class.size(); ++q) {
    EXPECT_GE(r.eta1_q[q], 0.0);
    EXPECT_GE(r.eta4_q[q], 0.0);
    const double h_weight = mesh->patch_of(static_cast<NodeId>(q)).diameter / std::sqrt(eps);
    EXPECT_LE(r.weight_q[q], h_weight);
    if (r.alpha_q[q] > 0) EXPECT_LE(r.weight_q[q], 1.0 / std::sqrt(r.alpha_q[q]) * (1 + 1e-15));
    if (r.node_class[q] == NodeClass::FullContact) {
      ++full;
      EXPECT_EQ(r.eta1_q[q], 0.0);
      EXPECT_EQ(r.eta2_q[q], 0.0);
    }
    if (r.node_class[q] == NodeClass::SemiContact) ++semi;
    if (r.node_class[q] != NodeClass::SemiContact) EXPECT_EQ(r.eta4_q[q], 0.0);
    sq[0] += r.eta1_q[q] * r.eta1_q[q];
    sq[1] += r.eta2_q[q] * r.eta2_q[q];
    sq[2] += r.eta3_q[q] * r.eta3_q[q];
    sq[3] += r.eta4_q[q] * r.eta4_q[q];
  }
  EXPECT_GT(full, 0u);
  EXPECT_GT(semi, 0u);
  EXPECT_NEAR(r.eta1 * r.eta1, sq[0], 1e-12 * sq[0]);
  EXPECT_NEAR(r.eta2 * r.eta2, sq[1], 1e-12 * sq[1]);
  EXPECT_NEAR(r.eta3 * r.eta3, sq[2], 1e-12 * sq[2] + 1e-300);
  EXPECT_NEAR(r.eta4 * r.eta4, sq[3], 1e-12 * sq[3] + 1e-300);
  EXPECT_DOUBLE_EQ(r.eta_total, r.eta1 + r.eta2 + r.eta3 + r.eta4);
  double cells = 0.0;
  for (double v : r.cell_indicator_sq) cells += v;
  EXPECT_NEAR(cells, sq[0] + sq[1] + sq[2] + sq[3], 1e-12 * cells);

  std::ostringstream csv;
  r.write_csv(csv, *mesh);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "node,x,y,class,eta1,eta2,eta3,eta4");
}
