#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracfield/bench.hpp"

using namespace fracfield;

namespace {

// Coarse 1a setup: 10x10 cells of side 2, refined once globally and once around the crack,
// so d = 0.5 equals the crack-zone cell side.
ExperimentConfig tiny_config(const std::string& example = "1a") {
  ExperimentConfig cfg;
  cfg.example = example;
  cfg.nu = {0.2};
  cfg.cell_side = 2.0;
  cfg.prerefine_rounds = 1;
  cfg.prerefine_zone = {-2.0, -2.0, 2.0, 2.0};
  cfg.d0 = 0.5;
  cfg.policy.levels = 0;
  return cfg;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Bench, ExampleTable) {
  EXPECT_EQ(example_spec("1a").form, FormKind::Primal);
  EXPECT_EQ(example_spec("1b").form, FormKind::Mixed);
  EXPECT_EQ(example_spec("2a").form, FormKind::Primal);
  EXPECT_EQ(example_spec("2b").form, FormKind::Mixed);
  EXPECT_EQ(example_spec("3a").form, FormKind::Mixed);
  EXPECT_EQ(example_spec("3b").form, FormKind::MixedRobust);
  EXPECT_EQ(example_spec("1a").half_width, 10.0);
  EXPECT_EQ(example_spec("2b").half_width, 20.0);
  EXPECT_TRUE(example_spec("3a").bump_pressure);
  EXPECT_FALSE(example_spec("3a").symmetric_in_x);
  EXPECT_THROW(example_spec("4a"), std::invalid_argument);
}

TEST(Bench, ConfigValidation) {
  ExperimentConfig cfg = tiny_config();
  EXPECT_NO_THROW(cfg.validate());
  cfg.nu.clear();
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = tiny_config();
  cfg.nu = {0.5};  // primal form cannot take the incompressible limit
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = tiny_config("3b");
  cfg.symmetry = Symmetry::Quarter;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.symmetry = Symmetry::Half;
  EXPECT_NO_THROW(cfg.validate());
  cfg.policy.mode = RefinementMode::Adaptive;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Bench, EmptyRatioListWritesNothing) {
  ExperimentConfig cfg = tiny_config();
  cfg.nu.clear();
  cfg.out_dir = ::testing::TempDir() + "/fracfield_empty_nu";
  EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
  EXPECT_FALSE(std::filesystem::exists(cfg.out_dir + "/1a_geometric.csv"));
  EXPECT_THROW(emit_tables({}, cfg.out_dir), std::invalid_argument);
}

TEST(Bench, LayeredMaterial) {
  const ExperimentConfig cfg;
  const MaterialMap m = example_material(example_spec("2b"), cfg, 0.5, 0.0625);
  EXPECT_EQ(m.poisson_ratio_at({0.0, 5.0}), 0.5);
  EXPECT_EQ(m.poisson_ratio_at({15.0, 0.0}), 0.2);
  EXPECT_EQ(m.poisson_ratio_at({-12.0, -19.0}), 0.2);
  EXPECT_EQ(m.poisson_ratio_at({0.5, 0.03}), 0.2);  // inside the crack strip
  EXPECT_EQ(m.poisson_ratio_at({0.5, 0.07}), 0.5);
  EXPECT_EQ(m.poisson_ratio_at({1.5, 0.03}), 0.5);
  const MaterialMap plain = example_material(example_spec("1b"), cfg, 0.49, 0.0625);
  EXPECT_EQ(plain.poisson_ratio_at({0.5, 0.03}), 0.49);
}

TEST(Bench, StartingMeshDofCountsNearReference) {
  // pre-refinement calibrated against the published coarsest-level counts (within 5%)
  const ExperimentConfig cfg;
  const struct {
    const char* id;
    double reference;
  } cases[] = {{"1a", 29988}, {"1b", 96436}, {"2a", 49508}, {"2b", 159316}};
  for (const auto& c : cases) {
    const ExampleSpec spec = example_spec(c.id);
    const QuadMesh m = initial_mesh(spec, cfg, Symmetry::None);
    const double n = static_cast<double>(count_dofs(m, spec.form));
    EXPECT_NEAR(n / c.reference, 1.0, 0.05) << c.id << ": " << n;
  }
}

TEST(Bench, DofCountMatchesSpaces) {
  const auto mesh = std::make_shared<const QuadMesh>(initial_mesh(example_spec("1b"), tiny_config("1b"), Symmetry::None));
  for (FormKind form : {FormKind::Primal, FormKind::Mixed}) {
    const FESystem fe(mesh, form);
    EXPECT_EQ(count_dofs(*mesh, form), fe.n_raw() + fe.n_phi());
  }
}

TEST(Bench, ReducedMeshesAreQuadrantsOfTheFullMesh) {
  const ExperimentConfig cfg;
  const ExampleSpec spec = example_spec("1a");
  const QuadMesh full = initial_mesh(spec, cfg, Symmetry::None);
  const QuadMesh half = initial_mesh(spec, cfg, Symmetry::Half);
  const QuadMesh quarter = initial_mesh(spec, cfg, Symmetry::Quarter);
  EXPECT_EQ(full.n_active(), 2 * half.n_active());
  EXPECT_EQ(full.n_active(), 4 * quarter.n_active());
  std::size_t in_quadrant = 0;
  for (std::size_t c = 0; c < full.n_active(); ++c) {
    const Rect b = full.cell_box(static_cast<int>(c));
    if (b.x0 >= 0.0 && b.y0 >= 0.0) {
      ++in_quadrant;
      const int q = quarter.find_active(b.center());
      ASSERT_GE(q, 0);
      EXPECT_EQ(quarter.cell_box(q).width(), b.width());
    }
  }
  EXPECT_EQ(in_quadrant, quarter.n_active());
}

TEST(Bench, SymmetryClamp) {
  const DisplacementClamp q = symmetry_clamp(Symmetry::Quarter, 10.0);
  EXPECT_TRUE(q({0.0, 3.0}, 0));
  EXPECT_FALSE(q({0.0, 3.0}, 1));
  EXPECT_FALSE(q({3.0, 0.0}, 0));
  EXPECT_TRUE(q({3.0, 0.0}, 1));
  EXPECT_TRUE(q({0.0, 0.0}, 0));
  EXPECT_TRUE(q({0.0, 0.0}, 1));
  EXPECT_TRUE(q({10.0, 0.0}, 0));
  EXPECT_TRUE(q({0.0, 10.0}, 1));
  const DisplacementClamp h = symmetry_clamp(Symmetry::Half, 20.0);
  EXPECT_FALSE(h({-5.0, 0.0}, 0));
  EXPECT_TRUE(h({-5.0, 0.0}, 1));
  EXPECT_TRUE(h({-20.0, 0.0}, 0));
  EXPECT_FALSE(static_cast<bool>(symmetry_clamp(Symmetry::None, 1.0)));
}

TEST(Bench, CsvFormat) {
  LevelRecord r;
  r.example = "2b";
  r.form = FormKind::Mixed;
  r.mode = RefinementMode::Adaptive;
  r.nu = 0.49999;
  r.level = 2;
  r.params = LevelParams::from_d(0.015625);
  r.dofs = 123456;
  r.qoi = {5.45e-3, 1.19e-8, 2.5};
  r.eta_total = 1.0;
  r.newton_steps = 17;
  r.loading_steps = 3;
  std::ostringstream out;
  write_csv(out, {r});
  const std::string s = out.str();
  EXPECT_EQ(count_lines(s), 2u);
  EXPECT_EQ(s.substr(0, s.find('\n')),
            "example,form,mode,nu,level,d,eps,dofs,tcv,bulk_energy,crack_energy,eta_total,eta1,eta2,eta3,eta4,"
            "newton_steps,loading_steps");
  const std::string row = s.substr(s.find('\n') + 1);
  EXPECT_EQ(row.rfind("2b,mixed,adaptive,4.99989999999999990e-01,2,1.56250000000000000e-02,", 0), 0u) << row;
  EXPECT_NE(row.find(",123456,5.44999999999999998e-03,"), std::string::npos) << row;
  EXPECT_EQ(row.substr(row.size() - 6), ",17,3\n");
  // full precision round trip
  std::istringstream cells(row);
  std::string tok;
  for (int i = 0; i < 4; ++i) std::getline(cells, tok, ',');
  EXPECT_EQ(std::stod(tok), 0.49999);
}

TEST(Bench, TinyRunIsDeterministicAndWritesFiles) {
  ExperimentConfig cfg = tiny_config();
  cfg.policy.levels = 1;
  cfg.out_dir = ::testing::TempDir() + "/fracfield_tiny";
  std::filesystem::remove_all(cfg.out_dir);
  const auto a = run_experiment(cfg);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_TRUE(a[0].converged && a[1].converged);
  EXPECT_EQ(a[1].params.d, 0.25);
  EXPECT_GT(a[0].qoi.tcv, 0.0);
  EXPECT_GT(a[0].qoi.crack_energy, 0.0);
  EXPECT_GT(a[0].eta_total, 0.0);
  std::ifstream f1(cfg.out_dir + "/1a_geometric.csv");
  const std::string csv1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  EXPECT_EQ(count_lines(csv1), 3u);
  EXPECT_TRUE(std::filesystem::exists(cfg.out_dir + "/1a_geometric_nu0.2_level1.vtk"));

  run_experiment(cfg);
  std::ifstream f2(cfg.out_dir + "/1a_geometric.csv");
  const std::string csv2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  EXPECT_EQ(csv1, csv2);
}

TEST(Bench, QuarterRunReproducesFullRun) {
  ExperimentConfig cfg = tiny_config();
  std::vector<std::pair<Point, Point>> samples;  // (x, u) on the full domain
  const auto full = run_experiment(cfg, [&](const LevelResult& r) {
    // mirror symmetry of the full solution at node pairs
    const auto& fe = r.model.fe();
    const auto& mesh = fe.mesh();
    const int n = static_cast<int>(fe.n_u_component());
    const Vector ux = r.state.u.head(n), uy = r.state.u.tail(n);
    double worst = 0.0;
    for (std::size_t q = 0; q < mesh.n_nodes(); ++q) {
      const Point x = mesh.node(static_cast<NodeId>(q));
      const Point mx(-x.x(), x.y()), my(x.x(), -x.y());
      const double a = evaluate_scalar(mesh, fe.displacement_dofs(), ux, x);
      const double b = evaluate_scalar(mesh, fe.displacement_dofs(), ux, mx);
      const double c = evaluate_scalar(mesh, fe.displacement_dofs(), uy, x);
      const double d = evaluate_scalar(mesh, fe.displacement_dofs(), uy, my);
      worst = std::max({worst, std::abs(a + b), std::abs(c + d)});
    }
    EXPECT_LE(worst, 1e-8);
  });
  cfg.symmetry = Symmetry::Quarter;
  const auto quarter = run_experiment(cfg);
  ASSERT_EQ(full.size(), 1u);
  ASSERT_EQ(quarter.size(), 1u);
  EXPECT_EQ(full[0].dofs, quarter[0].dofs);
  EXPECT_NEAR(quarter[0].qoi.tcv, full[0].qoi.tcv, 1e-9 * std::abs(full[0].qoi.tcv));
  EXPECT_NEAR(quarter[0].qoi.bulk_energy, full[0].qoi.bulk_energy, 1e-9 * std::abs(full[0].qoi.bulk_energy));
  EXPECT_NEAR(quarter[0].qoi.crack_energy, full[0].qoi.crack_energy, 1e-9 * full[0].qoi.crack_energy);
  EXPECT_TRUE(std::isnan(quarter[0].eta_total));
}

TEST(Bench, ZeroStateFieldsFile) {
  const auto mesh = std::make_shared<const QuadMesh>(QuadMesh::build_uniform({0, 0, 2, 1}, 2, 1).refine(std::vector<CellId>{0}));
  const FESystem fe(mesh, FormKind::Mixed);
  const PhaseFieldModel model(fe, MaterialMap(1.0, 0.3, 1.0, 1e-8), PressureField::constant(0.0), 1.0);
  const SystemState s = SystemState::zeros(fe);
  std::ostringstream out;
  write_fields(out, model, s, std::vector<double>(mesh->n_active(), 0.0));
  const std::string v = out.str();
  EXPECT_EQ(v.rfind("# vtk DataFile Version", 0), 0u);
  EXPECT_NE(v.find("POINTS " + std::to_string(mesh->n_nodes()) + " double"), std::string::npos);
  EXPECT_NE(v.find("POINT_DATA " + std::to_string(mesh->n_nodes())), std::string::npos);
  EXPECT_NE(v.find("CELL_DATA " + std::to_string(mesh->n_active())), std::string::npos);
  for (const char* name : {"SCALARS u_x", "SCALARS u_y", "SCALARS phi", "SCALARS p", "SCALARS eta"}) {
    EXPECT_NE(v.find(name), std::string::npos) << name;
  }
  // every scalar after a lookup table line is zero
  std::istringstream in(v);
  std::string line;
  bool in_data = false;
  int values = 0;
  while (std::getline(in, line)) {
    if (line.rfind("LOOKUP_TABLE", 0) == 0) {
      in_data = true;
      continue;
    }
    if (line.rfind("SCALARS", 0) == 0 || line.rfind("CELL_DATA", 0) == 0) {
      in_data = false;
      continue;
    }
    if (in_data) {
      EXPECT_EQ(std::stod(line), 0.0);
      ++values;
    }
  }
  EXPECT_EQ(values, static_cast<int>(3 * mesh->n_nodes() + 2 * mesh->n_active()));
}
