#include "fracfield/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fracfield {

namespace {

template <typename... Args>
std::string strf(const char* fmt, Args... args) {
  const int n = std::snprintf(nullptr, 0, fmt, args...);
  std::string s(static_cast<std::size_t>(n), '\0');
  std::snprintf(s.data(), s.size() + 1, fmt, args...);
  return s;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double symmetry_factor(Symmetry s) {
  switch (s) {
    case Symmetry::None: return 1.0;
    case Symmetry::Half: return 2.0;
    case Symmetry::Quarter: return 4.0;
  }
  return 1.0;
}

// Active cells the box boundary passes through.
std::vector<CellId> cells_cut_by(const QuadMesh& mesh, const Rect& box) {
  std::vector<CellId> ids;
  for (std::size_t c = 0; c < mesh.n_active(); ++c) {
    const Rect b = mesh.cell_box(static_cast<int>(c));
    const bool inside = b.x0 >= box.x0 && b.x1 <= box.x1 && b.y0 >= box.y0 && b.y1 <= box.y1;
    if (b.overlaps_interior(box) && !inside) ids.push_back(mesh.cell_id(static_cast<int>(c)));
  }
  return ids;
}

Rect crack_strip(double d) { return {-1.0, -d, 1.0, d}; }

}  // namespace

const std::vector<std::string>& example_ids() {
  static const std::vector<std::string> ids{"1a", "1b", "2a", "2b", "3a", "3b"};
  return ids;
}

ExampleSpec example_spec(const std::string& id) {
  ExampleSpec s;
  s.id = id;
  if (id == "1a" || id == "1b") {
    s.form = id == "1a" ? FormKind::Primal : FormKind::Mixed;
  } else if (id == "2a" || id == "2b") {
    s.form = id == "2a" ? FormKind::Primal : FormKind::Mixed;
    s.half_width = 20.0;
    s.layered = true;
  } else if (id == "3a" || id == "3b") {
    s.form = id == "3a" ? FormKind::Mixed : FormKind::MixedRobust;
    s.half_width = 20.0;
    s.layered = true;
    s.bump_pressure = true;
    s.symmetric_in_x = false;
  } else {
    throw std::invalid_argument("unknown example '" + id + "' (expected one of 1a 1b 2a 2b 3a 3b)");
  }
  return s;
}

const char* to_string(Symmetry s) {
  switch (s) {
    case Symmetry::None: return "none";
    case Symmetry::Half: return "half";
    case Symmetry::Quarter: return "quarter";
  }
  return "?";
}

Symmetry symmetry_from_string(const std::string& s) {
  if (s == "none") return Symmetry::None;
  if (s == "half") return Symmetry::Half;
  if (s == "quarter") return Symmetry::Quarter;
  throw std::invalid_argument("unknown symmetry '" + s + "'");
}

void ExperimentConfig::validate() const {
  const ExampleSpec spec = example_spec(example);
  if (nu.empty()) throw std::invalid_argument("no Poisson ratio given");
  for (double v : nu) {
    if (!(v >= 0.0 && v <= 0.5)) throw std::invalid_argument(strf("Poisson ratio %g outside [0, 0.5]", v));
    if (spec.form == FormKind::Primal && v >= 0.5) {
      throw std::invalid_argument("the primal form (examples 1a, 2a) needs a Poisson ratio below 0.5");
    }
  }
  policy.validate();
  solver.validate();
  if (!(d0 > 0.0) || !(cell_side > 0.0)) throw std::invalid_argument("d0 and cell_side must be positive");
  const double n = spec.half_width / cell_side;
  if (std::abs(n - std::round(n)) > 1e-12) throw std::invalid_argument("cell_side must divide the domain half width");
  if (prerefine_rounds < 0) throw std::invalid_argument("negative pre-refinement count");
  if (symmetry != Symmetry::None && policy.mode == RefinementMode::Adaptive) {
    throw std::invalid_argument("symmetric reduction is only available for geometric refinement");
  }
  if (symmetry == Symmetry::Quarter && !spec.symmetric_in_x) {
    throw std::invalid_argument("example " + example + " is not symmetric in x; use half symmetry");
  }
}

MaterialMap example_material(const ExampleSpec& spec, const ExperimentConfig& cfg, double nu, double d) {
  if (!spec.layered) return MaterialMap(cfg.youngs_modulus, nu, cfg.fracture_toughness, cfg.kappa);
  MaterialMap m(cfg.youngs_modulus, cfg.layer_poisson_ratio, cfg.fracture_toughness, cfg.kappa);
  m.add_region({-10.0, -10.0, 10.0, 10.0}, nu);
  m.add_region(crack_strip(d), cfg.layer_poisson_ratio);
  return m;
}

PressureField example_pressure(const ExampleSpec& spec, const ExperimentConfig& cfg) {
  return spec.bump_pressure ? PressureField::bump() : PressureField::constant(cfg.pressure);
}

QuadMesh initial_mesh(const ExampleSpec& spec, const ExperimentConfig& cfg, Symmetry symmetry) {
  const double w = spec.half_width;
  const int n = static_cast<int>(std::lround(w / cfg.cell_side));
  QuadMesh m = symmetry == Symmetry::None   ? QuadMesh::build_uniform({-w, -w, w, w}, 2 * n, 2 * n)
               : symmetry == Symmetry::Half ? QuadMesh::build_uniform({-w, 0.0, w, w}, 2 * n, n)
                                            : QuadMesh::build_uniform({0.0, 0.0, w, w}, n, n);
  std::vector<CellId> all(m.active_cells().begin(), m.active_cells().end());
  m = m.refine(all);
  for (int r = 0; r < cfg.prerefine_rounds; ++r) m = m.refine(cells_overlapping(m, cfg.prerefine_zone));
  return m;
}

DisplacementClamp symmetry_clamp(Symmetry symmetry, double half_width) {
  if (symmetry == Symmetry::None) return {};
  const double tol = 1e-9 * half_width;
  return [symmetry, half_width, tol](const Point& x, int component) {
    const bool outer = std::abs(x.x()) >= half_width - tol || x.y() >= half_width - tol;
    if (outer) return true;
    const bool mirror_x = symmetry == Symmetry::Quarter && std::abs(x.x()) <= tol;
    const bool mirror_y = std::abs(x.y()) <= tol;
    // the normal component vanishes on a mirror plane, the tangential one slides
    return (mirror_x && component == 0) || (mirror_y && component == 1);
  };
}

std::size_t count_dofs(const QuadMesh& mesh, FormKind form) {
  const ScalarDofHandler q1(mesh, 1);
  const std::size_t nu = form == FormKind::Primal ? q1.n_dofs() : ScalarDofHandler(mesh, 2).n_dofs();
  const std::size_t np = form == FormKind::Primal ? 0 : 3 * mesh.n_active();
  return 2 * nu + np + 2 * q1.n_dofs();
}

std::vector<LevelRecord> run_experiment(const ExperimentConfig& cfg, const LevelObserver& observer) {
  cfg.validate();
  const ExampleSpec spec = example_spec(cfg.example);
  const PressureField pressure = example_pressure(spec, cfg);
  const double scale = symmetry_factor(cfg.symmetry);
  const DisplacementClamp clamp = symmetry_clamp(cfg.symmetry, spec.half_width);
  std::vector<LevelRecord> records;
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  for (double nu : cfg.nu) {
    auto mesh = std::make_shared<const QuadMesh>(initial_mesh(spec, cfg, cfg.symmetry));
    std::shared_ptr<const QuadMesh> full_mesh;  // DoF bookkeeping of reduced runs
    if (cfg.symmetry != Symmetry::None) {
      full_mesh = std::make_shared<const QuadMesh>(initial_mesh(spec, cfg, Symmetry::None));
    }
    LevelParams params = LevelParams::from_d(cfg.d0);
    EstimatorReport report;

    for (int level = 0; level <= cfg.policy.levels; ++level) {
      if (level > 0) {
        LevelTransition t = advance_level(*mesh, params, cfg.policy, &report);
        mesh = t.mesh;
        params = t.params;
        // The prescribed crack (and, in the layered examples, the material interface) must
        // follow mesh lines with the new d; geometric levels satisfy this already.
        for (auto cut = cells_cut_by(*mesh, crack_strip(params.d)); !cut.empty();
             cut = cells_cut_by(*mesh, crack_strip(params.d))) {
          mesh = std::make_shared<const QuadMesh>(mesh->refine(cut));
        }
        if (full_mesh) full_mesh = advance_level(*full_mesh, params, cfg.policy).mesh;
      }

      LevelRecord rec;
      rec.example = spec.id;
      rec.form = spec.form;
      rec.mode = cfg.policy.mode;
      rec.nu = nu;
      rec.level = level;
      rec.params = params;
      rec.cells = full_mesh ? full_mesh->n_active() : mesh->n_active();
      rec.dofs = count_dofs(full_mesh ? *full_mesh : *mesh, spec.form);

      const FESystem fe(mesh, spec.form, clamp);
      const MaterialMap material = example_material(spec, cfg, nu, params.d);
      material.check_alignment(*mesh);
      const PhaseFieldModel model(fe, material, pressure, params.eps);
      const Vector phi0 = initial_crack(fe.phase_dofs(), params.d);
      if (cfg.log) {
        *cfg.log << strf("%s %s nu %.6g  level %d  mode %s  cells %zu  dofs u %zu p %zu phi %zu  eps %.6e  d %.6e\n",
                         spec.id.c_str(), to_string(spec.form), nu, level, to_string(cfg.policy.mode),
                         mesh->n_active(), fe.n_u(), fe.n_p(), fe.n_phi(), params.eps, params.d);
        cfg.log->flush();
      }

      const auto t0 = std::chrono::steady_clock::now();
      LoadingResult solved;
      try {
        solved = run_loading_loop(phi0, model, cfg.solver);
      } catch (const NonConvergence& e) {
        rec.converged = false;
        rec.diagnostic = e.what();
        rec.qoi = {kNaN, kNaN, kNaN};
        rec.eta_total = rec.eta1 = rec.eta2 = rec.eta3 = rec.eta4 = kNaN;
        if (cfg.log) *cfg.log << "  not converged: " << e.what() << '\n';
        records.push_back(rec);
        break;
      }
      const SystemState& state = solved.state;
      rec.newton_steps = solved.newton_steps;
      rec.loading_steps = solved.loading_steps;
      const QoIRecord q = evaluate_qoi(model, state);
      rec.qoi = {scale * q.tcv, scale * q.bulk_energy, scale * q.crack_energy};

      report = EstimatorReport{};
      if (cfg.symmetry == Symmetry::None) {
        report = estimate(model, state);
        rec.eta_total = report.eta_total;
        rec.eta1 = report.eta1;
        rec.eta2 = report.eta2;
        rec.eta3 = report.eta3;
        rec.eta4 = report.eta4;
      } else {
        rec.eta_total = rec.eta1 = rec.eta2 = rec.eta3 = rec.eta4 = kNaN;
      }
      if (cfg.log) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        *cfg.log << strf("  tcv %.6e  E_b %.6e  E_c %.6e  eta %.6e  newton %d  loading %d  (%.1f s)\n", rec.qoi.tcv,
                         rec.qoi.bulk_energy, rec.qoi.crack_energy, rec.eta_total, rec.newton_steps,
                         rec.loading_steps, secs);
        cfg.log->flush();
      }
      if (!cfg.out_dir.empty() && cfg.write_fields) {
        const std::string path = (std::filesystem::path(cfg.out_dir) /
                                  strf("%s_%s_nu%g_level%d.vtk", spec.id.c_str(), to_string(cfg.policy.mode), nu, level))
                                     .string();
        emit_fields(path, model, state, report.cell_indicator_sq);
      }
      records.push_back(rec);
      if (observer) observer(LevelResult{records.back(), model, state, report});
    }
  }
  if (!cfg.out_dir.empty()) emit_tables(records, cfg.out_dir);
  return records;
}

void write_csv(std::ostream& out, const std::vector<LevelRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << strf("%s,%s,%s,%.17e,%d,%.17e,%.17e,%zu,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e,%.17e,%d,%d\n",
                r.example.c_str(), to_string(r.form), to_string(r.mode), r.nu, r.level, r.params.d, r.params.eps,
                r.dofs, r.qoi.tcv, r.qoi.bulk_energy, r.qoi.crack_energy, r.eta_total, r.eta1, r.eta2, r.eta3,
                r.eta4, r.newton_steps, r.loading_steps);
  }
}

std::string emit_tables(const std::vector<LevelRecord>& records, const std::string& dir) {
  if (records.empty()) throw std::invalid_argument("emit_tables: no records");
  std::filesystem::create_directories(dir);
  const auto& first = records.front();
  const std::string path =
      (std::filesystem::path(dir) / (first.example + "_" + to_string(first.mode) + ".csv")).string();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_csv(f, records);
  if (!f) throw std::runtime_error("write failed: " + path);
  return path;
}

void write_fields(std::ostream& out, const PhaseFieldModel& model, const SystemState& state,
                  const std::vector<double>& cell_indicator_sq) {
  const FESystem& fe = model.fe();
  const QuadMesh& mesh = fe.mesh();
  const std::size_t nn = mesh.n_nodes();
  const std::size_t nc = mesh.n_active();
  const int nuc = static_cast<int>(fe.n_u_component());
  const Vector ux = state.u.head(nuc);
  const Vector uy = state.u.tail(nuc);
  std::vector<VtkField> points{{"u_x", std::vector<double>(nn)}, {"u_y", std::vector<double>(nn)},
                               {"phi", std::vector<double>(nn)}};
  for (std::size_t q = 0; q < nn; ++q) {
    const NodeId id = static_cast<NodeId>(q);
    const int cell = mesh.node_cells(id).front();
    points[0].values[q] = evaluate_on_cell(mesh, fe.displacement_dofs(), ux, cell, mesh.node(id));
    points[1].values[q] = evaluate_on_cell(mesh, fe.displacement_dofs(), uy, cell, mesh.node(id));
    points[2].values[q] = state.phi[static_cast<int>(q)];
  }
  std::vector<VtkField> cells;
  if (fe.has_pressure()) {
    VtkField p{"p", std::vector<double>(nc)};
    for (std::size_t k = 0; k < nc; ++k) p.values[k] = state.p[static_cast<int>(3 * k)];
    cells.push_back(std::move(p));
  }
  if (!cell_indicator_sq.empty()) {
    if (cell_indicator_sq.size() != nc) throw std::invalid_argument("write_fields: indicator size mismatch");
    VtkField eta{"eta", std::vector<double>(nc)};
    for (std::size_t k = 0; k < nc; ++k) eta.values[k] = std::sqrt(cell_indicator_sq[k]);
    cells.push_back(std::move(eta));
  }
  write_vtk(out, mesh, points, cells);
}

void emit_fields(const std::string& path, const PhaseFieldModel& model, const SystemState& state,
                 const std::vector<double>& cell_indicator_sq) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  write_fields(f, model, state, cell_indicator_sq);
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace fracfield
