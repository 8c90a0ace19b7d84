#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fracfield/bench.hpp"

#ifdef FRACFIELD_HAVE_ACCEPTANCE
#include "acceptance.hpp"
#endif

namespace {

using fracfield::ExperimentConfig;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNonConvergence = 2;

struct RunFlags {
  std::string example = "1a";
  std::vector<double> nu{0.2};
  int levels = 3;
  std::string mode = "geometric";
  double theta = 0.5;
  std::string marking = "optimal";
  std::string out = "results";
  std::string config;
  std::string symmetry = "none";
  bool no_fields = false;
  bool newton_log = false;
};

// Values present in the JSON file take precedence over command line flags.
void apply_config_file(const std::string& path, RunFlags& f, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file " + path);
  const json j = json::parse(in);
  if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object");
  static const std::vector<std::string> known{"example", "nu", "levels", "mode", "theta", "marking", "out", "symmetry",
                                              "write_fields", "crack_zone", "solver", "prerefine_zone",
                                              "prerefine_rounds", "d0"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  auto rect = [](const json& v) {
    const auto a = v.get<std::vector<double>>();
    if (a.size() != 4) throw std::invalid_argument("boxes are given as [x0, y0, x1, y1]");
    return fracfield::Rect{a[0], a[1], a[2], a[3]};
  };
  if (j.contains("example")) f.example = j["example"].get<std::string>();
  if (j.contains("nu")) f.nu = j["nu"].is_array() ? j["nu"].get<std::vector<double>>() : std::vector{j["nu"].get<double>()};
  if (j.contains("levels")) f.levels = j["levels"].get<int>();
  if (j.contains("mode")) f.mode = j["mode"].get<std::string>();
  if (j.contains("theta")) f.theta = j["theta"].get<double>();
  if (j.contains("marking")) f.marking = j["marking"].get<std::string>();
  if (j.contains("out")) f.out = j["out"].get<std::string>();
  if (j.contains("symmetry")) f.symmetry = j["symmetry"].get<std::string>();
  if (j.contains("write_fields")) f.no_fields = !j["write_fields"].get<bool>();
  if (j.contains("crack_zone")) cfg.policy.crack_zone = rect(j["crack_zone"]);
  if (j.contains("prerefine_zone")) cfg.prerefine_zone = rect(j["prerefine_zone"]);
  if (j.contains("prerefine_rounds")) cfg.prerefine_rounds = j["prerefine_rounds"].get<int>();
  if (j.contains("d0")) cfg.d0 = j["d0"].get<double>();
  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (s.contains("newton_tolerance")) cfg.solver.newton_tolerance = s["newton_tolerance"].get<double>();
    if (s.contains("max_newton_iterations")) cfg.solver.max_newton_iterations = s["max_newton_iterations"].get<int>();
    if (s.contains("max_loading_steps")) cfg.solver.max_loading_steps = s["max_loading_steps"].get<int>();
    if (s.contains("stagnation_tolerance")) cfg.solver.stagnation_tolerance = s["stagnation_tolerance"].get<double>();
  }
}

int run_command(RunFlags f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) apply_config_file(f.config, f, cfg);
  cfg.example = f.example;
  cfg.nu = f.nu;
  cfg.policy.levels = f.levels;
  cfg.policy.mode = fracfield::refinement_mode_from_string(f.mode);
  cfg.policy.theta = f.theta;
  cfg.policy.marking = fracfield::marking_strategy_from_string(f.marking);
  cfg.symmetry = fracfield::symmetry_from_string(f.symmetry);
  cfg.out_dir = f.out;
  cfg.write_fields = !f.no_fields;
  cfg.log = &std::cout;
  if (f.newton_log) cfg.solver.log = &std::cout;
  cfg.validate();

  const auto records = fracfield::run_experiment(cfg);
  std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / (cfg.example + "_" + f.mode + ".csv")).string()
            << '\n';
  for (const auto& r : records) {
    if (!r.converged) {
      std::cerr << "non-convergence at nu " << r.nu << " level " << r.level << ": " << r.diagnostic << '\n';
      return kExitNonConvergence;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive phase-field fracture solver: Sneddon-type benchmark runner"};
  app.require_subcommand(1);

  RunFlags flags;
  auto* run = app.add_subcommand("run", "Run one example over all refinement levels and write CSV/VTK output");
  run->add_option("--example", flags.example, "Example id")
      ->check(CLI::IsMember(fracfield::example_ids()));
  run->add_option("--nu", flags.nu, "Poisson ratios (comma separated)")->delimiter(',');
  run->add_option("--levels", flags.levels, "Refinement rounds after the starting mesh")->check(CLI::NonNegativeNumber);
  run->add_option("--mode", flags.mode, "Refinement mode")->check(CLI::IsMember({"geometric", "adaptive"}));
  run->add_option("--theta", flags.theta, "Marking fraction in (0,1), used with --marking bulk");
  run->add_option("--marking", flags.marking, "Adaptive marking strategy")->check(CLI::IsMember({"bulk", "optimal"}));
  run->add_option("--out", flags.out, "Output directory");
  run->add_option("--config", flags.config, "JSON file; its values override the flags");
  run->add_option("--symmetry", flags.symmetry, "Solve on a mirror-reduced domain (geometric mode)")
      ->check(CLI::IsMember({"none", "half", "quarter"}));
  run->add_flag("--no-fields", flags.no_fields, "Skip VTK output");
  run->add_flag("--newton-log", flags.newton_log, "Print one line per Newton iteration");

  double ref_nu = 0.2, ref_p = 1e-3, ref_l0 = 1.0, ref_e = 1.0;
  auto* reference = app.add_subcommand("reference", "Print the infinite-domain reference crack volume");
  reference->add_option("--nu", ref_nu, "Poisson ratio")->required();
  reference->add_option("--pressure", ref_p, "Crack pressure");
  reference->add_option("--half-length", ref_l0, "Crack half length");
  reference->add_option("--youngs", ref_e, "Young's modulus");

  std::vector<int> only;
  auto* verify = app.add_subcommand("verify", "Run the acceptance criteria and print one line per criterion");
  verify->add_option("--only", only, "Criterion numbers to run (comma separated)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) return run_command(flags);
    if (*reference) {
      std::printf("%.17g\n", fracfield::sneddon_reference_tcv(ref_p, ref_l0, ref_e, ref_nu));
      return kExitOk;
    }
    if (*verify) {
#ifdef FRACFIELD_HAVE_ACCEPTANCE
      return fracfield::acceptance::run_all(std::cout, only) ? kExitOk : 1;
#else
      std::cerr << "this build has no acceptance suite (configure with FRACFIELD_BUILD_TESTS=ON)\n";
      return kExitUsage;
#endif
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fracfield::SingularMatrix& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
