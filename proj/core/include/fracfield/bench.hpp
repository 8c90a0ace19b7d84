#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracfield/adapt.hpp"
#include "fracfield/qoi.hpp"
#include "fracfield/solver.hpp"

namespace fracfield {

/// Static description of one benchmark configuration (1a ... 3b).
struct ExampleSpec {
  std::string id;
  FormKind form = FormKind::Primal;
  double half_width = 10.0;      // domain (-w, w)^2
  bool layered = false;          // compressible frame outside (-10,10)^2 and inside the crack strip
  bool bump_pressure = false;
  bool symmetric_in_x = true;    // setup is mirror symmetric about x = 0
};

ExampleSpec example_spec(const std::string& id);
const std::vector<std::string>& example_ids();

/// Exact mirror reductions of symmetric setups; mirror planes carry a sliding condition.
enum class Symmetry { None, Half, Quarter };
const char* to_string(Symmetry s);
Symmetry symmetry_from_string(const std::string& s);

struct ExperimentConfig {
  std::string example = "1a";
  std::vector<double> nu{0.2};
  RefinementPolicy policy;
  SolverConfig solver;
  std::string out_dir;      // empty: no files
  bool write_fields = true;  // VTK per level (requires out_dir)

  double youngs_modulus = 1.0;
  double fracture_toughness = 1.0;
  double kappa = 1e-8;
  double pressure = 1e-3;  // constant crack pressure (examples 1, 2); example 3 uses the fixed bump
  double layer_poisson_ratio = 0.2;

  double d0 = 0.0625;
  double cell_side = 1.0;  // coarse grid spacing
  Rect prerefine_zone{-3.5, -1.5, 3.5, 1.5};
  int prerefine_rounds = 3;

  /// Solve on the y >= 0 half (Half) or the first quadrant (Quarter); QoIs are scaled
  /// back to the full domain, DoF counts are those of the full mesh, estimator columns are NaN.
  Symmetry symmetry = Symmetry::None;

  std::ostream* log = nullptr;

  void validate() const;
};

struct LevelRecord {
  std::string example;
  FormKind form = FormKind::Primal;
  RefinementMode mode = RefinementMode::Geometric;
  double nu = 0.0;
  int level = 0;
  LevelParams params;
  std::size_t dofs = 0;  // u, p, phi and the multiplier, hanging and Dirichlet dofs included
  std::size_t cells = 0;
  QoIRecord qoi;
  double eta_total = 0.0, eta1 = 0.0, eta2 = 0.0, eta3 = 0.0, eta4 = 0.0;
  int newton_steps = 0;
  int loading_steps = 0;
  bool converged = true;
  std::string diagnostic;
};

/// Everything known about a finished level, handed to observers before the next level.
struct LevelResult {
  const LevelRecord& record;
  const PhaseFieldModel& model;
  const SystemState& state;
  const EstimatorReport& report;  // empty when the estimator was skipped
};
using LevelObserver = std::function<void(const LevelResult&)>;

/// Material map of an example at a given Poisson ratio and crack half-thickness.
MaterialMap example_material(const ExampleSpec& spec, const ExperimentConfig& cfg, double nu, double d);
PressureField example_pressure(const ExampleSpec& spec, const ExperimentConfig& cfg);

/// Level-0 mesh of the example on the (possibly reduced) domain.
QuadMesh initial_mesh(const ExampleSpec& spec, const ExperimentConfig& cfg, Symmetry symmetry);
DisplacementClamp symmetry_clamp(Symmetry symmetry, double half_width);

/// Reported DoF count of a mesh and form: every raw u, p and phi coefficient plus one multiplier per phi node.
std::size_t count_dofs(const QuadMesh& mesh, FormKind form);

/// Runs every level for every Poisson ratio. Non-convergence ends the levels of that ratio
/// with a record whose `converged` flag is false.
std::vector<LevelRecord> run_experiment(const ExperimentConfig& cfg, const LevelObserver& observer = {});

inline constexpr const char* kCsvHeader =
    "example,form,mode,nu,level,d,eps,dofs,tcv,bulk_energy,crack_energy,eta_total,eta1,eta2,eta3,eta4,"
    "newton_steps,loading_steps";
void write_csv(std::ostream& out, const std::vector<LevelRecord>& records);
/// Writes <dir>/<example>_<mode>.csv and returns its path.
std::string emit_tables(const std::vector<LevelRecord>& records, const std::string& dir);

/// Legacy VTK: point fields u_x, u_y, phi; cell fields p (cell mean, mixed forms) and eta.
void write_fields(std::ostream& out, const PhaseFieldModel& model, const SystemState& state,
                  const std::vector<double>& cell_indicator_sq = {});
void emit_fields(const std::string& path, const PhaseFieldModel& model, const SystemState& state,
                 const std::vector<double>& cell_indicator_sq = {});

}  // namespace fracfield
