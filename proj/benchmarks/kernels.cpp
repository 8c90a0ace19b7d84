#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>

#include "fracfield/adapt.hpp"
#include "fracfield/estimator.hpp"
#include "fracfield/solver.hpp"

using namespace fracfield;

namespace {

// Crack-centred mesh of (-4,4)^2 with `rounds` local refinements around the crack.
std::shared_ptr<const QuadMesh> crack_mesh(int rounds) {
  return std::make_shared<const QuadMesh>(pre_refined_mesh({-4.0, -4.0, 4.0, 4.0}, 8, {-1.5, -0.5, 1.5, 0.5}, rounds));
}

double smallest_side(const QuadMesh& mesh) {
  double h = INFINITY;
  for (std::size_t k = 0; k < mesh.n_active(); ++k) h = std::min(h, mesh.cell_box(static_cast<int>(k)).width());
  return h;
}

FormKind form_of(int i) { return static_cast<FormKind>(i); }

struct Problem {
  std::shared_ptr<const QuadMesh> mesh;
  FESystem fe;
  MaterialMap material{1.0, 0.2, 1.0, 1e-8};
  PressureField pressure = PressureField::constant(1e-3);
  double d;
  PhaseFieldModel model;
  SystemState state;

  Problem(int rounds, FormKind form)
      : mesh(crack_mesh(rounds)),
        fe(mesh, form),
        d(smallest_side(*mesh)),
        model(fe, material, pressure, 4 * std::sqrt(2.0) * d),
        state(SystemState::zeros(fe)) {
    state.phi = initial_crack(fe.phase_dofs(), d);
    state.phi_prev = state.phi;
  }
};

void BM_Refine(benchmark::State& st) {
  const auto mesh = crack_mesh(static_cast<int>(st.range(0)));
  const auto marked = cells_overlapping(*mesh, {-1.0, -1.0, 1.0, 1.0});
  for (auto _ : st) benchmark::DoNotOptimize(mesh->refine(marked));
  st.counters["cells"] = static_cast<double>(mesh->n_active());
}
BENCHMARK(BM_Refine)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_Residual(benchmark::State& st) {
  const Problem p(static_cast<int>(st.range(0)), form_of(static_cast<int>(st.range(1))));
  for (auto _ : st) benchmark::DoNotOptimize(p.model.residual(p.state));
  st.counters["raw_dofs"] = static_cast<double>(p.fe.n_raw());
}
BENCHMARK(BM_Residual)->ArgsProduct({{3, 4}, {0, 1, 2}})->Unit(benchmark::kMillisecond);

void BM_Jacobian(benchmark::State& st) {
  const Problem p(static_cast<int>(st.range(0)), form_of(static_cast<int>(st.range(1))));
  for (auto _ : st) benchmark::DoNotOptimize(p.model.jacobian(p.state));
  st.counters["raw_dofs"] = static_cast<double>(p.fe.n_raw());
}
BENCHMARK(BM_Jacobian)->ArgsProduct({{3, 4}, {0, 1, 2}})->Unit(benchmark::kMillisecond);

void BM_LoadingStep(benchmark::State& st) {
  const Problem p(static_cast<int>(st.range(0)), form_of(static_cast<int>(st.range(1))));
  for (auto _ : st) benchmark::DoNotOptimize(solve_loading_step(p.state, p.model, {}));
  st.counters["raw_dofs"] = static_cast<double>(p.fe.n_raw());
}
BENCHMARK(BM_LoadingStep)->ArgsProduct({{3}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_Estimator(benchmark::State& st) {
  const Problem p(static_cast<int>(st.range(0)), FormKind::Primal);
  const SystemState solved = solve_loading_step(p.state, p.model, {}).state;
  for (auto _ : st) benchmark::DoNotOptimize(estimate(p.model, solved));
  st.counters["cells"] = static_cast<double>(p.mesh->n_active());
}
BENCHMARK(BM_Estimator)->Arg(3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
