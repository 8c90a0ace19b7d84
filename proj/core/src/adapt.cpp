#include "fracfield/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fracfield {

const char* to_string(RefinementMode mode) {
  return mode == RefinementMode::Geometric ? "geometric" : "adaptive";
}

RefinementMode refinement_mode_from_string(const std::string& s) {
  if (s == "geometric") return RefinementMode::Geometric;
  if (s == "adaptive") return RefinementMode::Adaptive;
  throw std::invalid_argument("unknown refinement mode '" + s + "'");
}

const char* to_string(MarkingStrategy m) { return m == MarkingStrategy::Bulk ? "bulk" : "optimal"; }

MarkingStrategy marking_strategy_from_string(const std::string& s) {
  if (s == "bulk") return MarkingStrategy::Bulk;
  if (s == "optimal") return MarkingStrategy::Optimal;
  throw std::invalid_argument("unknown marking strategy '" + s + "'");
}

void RefinementPolicy::validate() const {
  if (!(order > 0.0)) throw std::invalid_argument("RefinementPolicy: order must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("RefinementPolicy: theta must lie in (0,1)");
  if (levels < 0) throw std::invalid_argument("RefinementPolicy: negative level count");
  if (!(crack_zone.x1 > crack_zone.x0 && crack_zone.y1 > crack_zone.y0)) {
    throw std::invalid_argument("RefinementPolicy: empty crack zone");
  }
}

LevelParams LevelParams::from_d(double d) {
  if (!(d > 0.0)) throw std::invalid_argument("LevelParams: d must be positive");
  return {d, 4.0 * std::sqrt(2.0) * d};
}

std::vector<int> dorfler_mark(std::span<const double> indicator_sq, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("dorfler_mark: theta must lie in (0,1]");
  std::vector<int> order(indicator_sq.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return indicator_sq[a] > indicator_sq[b]; });
  double total = 0.0;
  for (int c : order) total += indicator_sq[c];
  std::vector<int> marked;
  if (!(total > 0.0)) return marked;
  const double target = theta * total;
  double acc = 0.0;
  for (int c : order) {
    // at theta = 1 rounding could stop before cells below the sum's resolution
    if ((theta < 1.0 && acc >= target) || !(indicator_sq[c] > 0.0)) break;
    acc += indicator_sq[c];
    marked.push_back(c);
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

std::vector<int> optimal_mark(std::span<const double> indicator_sq, double order) {
  if (!(order > 0.0)) throw std::invalid_argument("optimal_mark: order must be positive");
  const std::size_t n = indicator_sq.size();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return indicator_sq[a] > indicator_sq[b]; });
  double total = 0.0;
  for (double v : indicator_sq) total += std::sqrt(std::max(v, 0.0));
  std::vector<int> marked;
  if (!(total > 0.0)) return marked;

  const double reduction = 1.0 - std::pow(2.0, -order);
  const double n_cells = static_cast<double>(n);
  double best = std::pow(n_cells, 0.5 * order) * total;
  std::size_t best_m = 0;
  double head = 0.0;
  for (std::size_t m = 1; m <= n; ++m) {
    const double eta = std::sqrt(std::max(indicator_sq[idx[m - 1]], 0.0));
    if (eta == 0.0) break;
    head += eta;
    const double cost = std::pow(n_cells + 3.0 * static_cast<double>(m), 0.5 * order) * (total - reduction * head);
    if (cost < best) {
      best = cost;
      best_m = m;
    }
  }
  marked.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(best_m));
  std::sort(marked.begin(), marked.end());
  return marked;
}

std::vector<CellId> mark(const EstimatorReport& report, const QuadMesh& mesh, const RefinementPolicy& policy) {
  if (policy.mode != RefinementMode::Adaptive) throw std::logic_error("mark: policy is not adaptive");
  if (report.cell_indicator_sq.size() != mesh.n_active()) {
    throw std::invalid_argument("mark: indicator count does not match the mesh");
  }
  std::vector<CellId> ids;
  const std::vector<int> marked = policy.marking == MarkingStrategy::Bulk
                                      ? dorfler_mark(report.cell_indicator_sq, policy.theta)
                                      : optimal_mark(report.cell_indicator_sq, policy.order);
  for (int c : marked) ids.push_back(mesh.cell_id(c));
  return ids;
}

std::vector<CellId> cells_overlapping(const QuadMesh& mesh, const Rect& box) {
  std::vector<CellId> ids;
  for (std::size_t c = 0; c < mesh.n_active(); ++c) {
    if (mesh.cell_box(static_cast<int>(c)).overlaps_interior(box)) ids.push_back(mesh.cell_id(static_cast<int>(c)));
  }
  return ids;
}

QuadMesh pre_refined_mesh(const Rect& domain, int cells_per_side, const Rect& zone, int zone_rounds) {
  QuadMesh m = QuadMesh::build_uniform(domain, cells_per_side, cells_per_side);
  std::vector<CellId> all(m.active_cells().begin(), m.active_cells().end());
  m = m.refine(all);
  for (int r = 0; r < zone_rounds; ++r) m = m.refine(cells_overlapping(m, zone));
  return m;
}

Vector initial_crack(const ScalarDofHandler& phase_dofs, double d, double half_length) {
  const double tol = 1e-9 * d;
  return interpolate_nodal(phase_dofs, [=](const Point& x) {
    return (std::abs(x.x()) <= half_length + tol && std::abs(x.y()) <= d + tol) ? 0.0 : 1.0;
  });
}

LevelTransition advance_level(const QuadMesh& mesh, const LevelParams& params, const RefinementPolicy& policy,
                              const EstimatorReport* report) {
  policy.validate();
  LevelTransition out;
  if (policy.mode == RefinementMode::Geometric) {
    out.marked = cells_overlapping(mesh, policy.crack_zone);
  } else {
    if (report == nullptr) throw std::invalid_argument("advance_level: adaptive mode needs an estimator report");
    out.marked = mark(*report, mesh, policy);
  }
  out.mesh = std::make_shared<const QuadMesh>(mesh.refine(out.marked));
  out.params = params.halved();
  return out;
}

}  // namespace fracfield
