#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fracfield/estimator.hpp"

namespace fracfield {

enum class RefinementMode { Geometric, Adaptive };
const char* to_string(RefinementMode mode);
RefinementMode refinement_mode_from_string(const std::string& s);

/// Bulk: Doerfler marking with fraction theta. Optimal: the number of marked cells minimizes
/// the predicted error times the predicted cell count, for an assumed convergence order.
enum class MarkingStrategy { Bulk, Optimal };
const char* to_string(MarkingStrategy m);
MarkingStrategy marking_strategy_from_string(const std::string& s);

struct RefinementPolicy {
  RefinementMode mode = RefinementMode::Geometric;
  Rect crack_zone{-2.0, -2.0, 2.0, 2.0};  // geometric mode: cells overlapping it are refined
  MarkingStrategy marking = MarkingStrategy::Optimal;
  double theta = 0.5;                     // bulk marking fraction
  double order = 2.0;                     // optimal marking: assumed convergence order in h
  int levels = 3;

  void validate() const;
};

/// Crack half-thickness d and bandwidth eps = 4 sqrt(2) d.
struct LevelParams {
  double d = 0.0625;
  double eps = 0.0;

  static LevelParams from_d(double d);
  LevelParams halved() const { return from_d(0.5 * d); }
};

/// Bulk (Doerfler) marking on squared indicators: the smallest set of cells, taken by
/// descending indicator with ties broken by index, whose sum reaches theta times the total.
/// Zero indicators are never marked. Returns active indices in ascending order.
std::vector<int> dorfler_mark(std::span<const double> indicator_sq, double theta);

/// Marks the M largest indicators eta_c = sqrt(indicator_sq), with M minimizing
///   (N + 3M)^(order/2) * (sum eta - (1 - 2^-order) * sum of the M largest eta),
/// i.e. the predicted error after refinement times the predicted cell count to the power
/// order/2. Returns active indices in ascending order.
std::vector<int> optimal_mark(std::span<const double> indicator_sq, double order);

/// Cell ids to refine in adaptive mode.
std::vector<CellId> mark(const EstimatorReport& report, const QuadMesh& mesh, const RefinementPolicy& policy);

/// Active cells whose interior overlaps the box.
std::vector<CellId> cells_overlapping(const QuadMesh& mesh, const Rect& box);

/// Coarse n x n grid, refined once globally and then `zone_rounds` times on the cells
/// overlapping `zone`.
QuadMesh pre_refined_mesh(const Rect& domain, int cells_per_side, const Rect& zone, int zone_rounds);

/// Nodal indicator of the prescribed crack [-l, l] x [-d, d]: 0 inside (closed set), 1 outside.
Vector initial_crack(const ScalarDofHandler& phase_dofs, double d, double half_length = 1.0);

struct LevelTransition {
  std::shared_ptr<const QuadMesh> mesh;
  LevelParams params;
  std::vector<CellId> marked;  // before closure
};

/// Refines for the next level (crack zone or marked cells) and halves d and eps.
/// Adaptive mode requires the estimator report of the current level.
LevelTransition advance_level(const QuadMesh& mesh, const LevelParams& params, const RefinementPolicy& policy,
                              const EstimatorReport* report = nullptr);

}  // namespace fracfield
