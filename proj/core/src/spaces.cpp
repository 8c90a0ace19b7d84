#include "fracfield/spaces.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace fracfield {

namespace {

// Lattice point at parameter quarter/4 along a face of a cell with origin o.
QuadMesh::LatticePoint face_point(const QuadMesh::LatticePoint& o, std::int64_t step, int face, int quarter) {
  const std::int64_t along = quarter * step / 4;
  switch (face) {
    case 0: return {o.x, o.y + along};
    case 1: return {o.x + step, o.y + along};
    case 2: return {o.x + along, o.y};
    default: return {o.x + along, o.y + step};
  }
}

Point reference_coords(const Rect& box, const Point& p) {
  return {(p.x() - box.x0) / box.width(), (p.y() - box.y0) / box.height()};
}

}  // namespace

const char* to_string(FormKind form) {
  switch (form) {
    case FormKind::Primal: return "primal";
    case FormKind::Mixed: return "mixed";
    case FormKind::MixedRobust: return "robust";
  }
  return "unknown";
}

ScalarDofHandler::ScalarDofHandler(const QuadMesh& mesh, int degree) : degree_(degree) {
  if (degree != 1 && degree != 2) throw std::invalid_argument("ScalarDofHandler: degree must be 1 or 2");
  const int per_dir = degree + 1;
  dofs_per_cell_ = per_dir * per_dir;
  const std::size_t n_cells = mesh.n_active();
  cell_dofs_.resize(n_cells * dofs_per_cell_);

  const std::int64_t ext_x = static_cast<std::int64_t>(mesh.coarse_cells_x()) << QuadMesh::kLatticeBits;
  const std::int64_t ext_y = static_cast<std::int64_t>(mesh.coarse_cells_y()) << QuadMesh::kLatticeBits;

  std::unordered_map<std::uint64_t, int> lookup;
  lookup.reserve(n_cells * (degree == 1 ? 2 : 5));
  auto dof_at = [&](const QuadMesh::LatticePoint& lp) {
    const auto [it, inserted] = lookup.try_emplace(QuadMesh::lattice_key(lp), static_cast<int>(points_.size()));
    if (inserted) {
      points_.push_back(mesh.lattice_to_point(lp));
      boundary_.push_back(lp.x == 0 || lp.y == 0 || lp.x == ext_x || lp.y == ext_y ? 1 : 0);
    }
    return it->second;
  };

  for (std::size_t k = 0; k < n_cells; ++k) {
    const auto o = mesh.cell_lattice_origin(static_cast<int>(k));
    const std::int64_t step = QuadMesh::lattice_step(mesh.cell_level(static_cast<int>(k)));
    for (int j = 0; j < per_dir; ++j) {
      for (int i = 0; i < per_dir; ++i) {
        cell_dofs_[k * dofs_per_cell_ + i + per_dir * j] = dof_at({o.x + i * step / degree, o.y + j * step / degree});
      }
    }
  }

  // direct constraints from every split face of a coarse cell
  std::map<int, std::vector<ConstraintEntry>> direct;
  for (std::size_t k = 0; k < n_cells; ++k) {
    const int cell = static_cast<int>(k);
    const auto o = mesh.cell_lattice_origin(cell);
    const std::int64_t step = QuadMesh::lattice_step(mesh.cell_level(cell));
    for (int f = 0; f < 4; ++f) {
      if (mesh.face_hanging_node(cell, f) < 0) continue;
      const int a = lookup.at(QuadMesh::lattice_key(face_point(o, step, f, 0)));
      const int m = lookup.at(QuadMesh::lattice_key(face_point(o, step, f, 2)));
      const int b = lookup.at(QuadMesh::lattice_key(face_point(o, step, f, 4)));
      if (degree == 1) {
        direct[m] = {{a, 0.5}, {b, 0.5}};
      } else {
        // coarse quadratic trace through (a, m, b) evaluated at s = 1/4 and s = 3/4
        const int q1 = lookup.at(QuadMesh::lattice_key(face_point(o, step, f, 1)));
        const int q3 = lookup.at(QuadMesh::lattice_key(face_point(o, step, f, 3)));
        direct[q1] = {{a, 0.375}, {m, 0.75}, {b, -0.125}};
        direct[q3] = {{a, -0.125}, {m, 0.75}, {b, 0.375}};
      }
    }
  }

  // flatten: masters may themselves hang on a coarser edge
  std::map<int, std::vector<ConstraintEntry>> resolved;
  std::function<const std::vector<ConstraintEntry>&(int)> resolve = [&](int dof) -> const std::vector<ConstraintEntry>& {
    if (auto it = resolved.find(dof); it != resolved.end()) return it->second;
    std::map<int, double> acc;
    for (const auto& e : direct.at(dof)) {
      if (direct.count(e.index)) {
        for (const auto& sub : resolve(e.index)) acc[sub.index] += e.weight * sub.weight;
      } else {
        acc[e.index] += e.weight;
      }
    }
    std::vector<ConstraintEntry> line;
    for (const auto& [idx, w] : acc) {
      if (w != 0.0) line.push_back({idx, w});
    }
    return resolved.emplace(dof, std::move(line)).first->second;
  };

  constraint_offsets_.assign(points_.size() + 1, 0);
  for (const auto& [dof, line] : direct) constraint_offsets_[dof + 1] = static_cast<int>(resolve(dof).size());
  for (std::size_t i = 1; i < constraint_offsets_.size(); ++i) constraint_offsets_[i] += constraint_offsets_[i - 1];
  constraint_entries_.resize(constraint_offsets_.back());
  for (const auto& [dof, line] : resolved) {
    std::copy(line.begin(), line.end(), constraint_entries_.begin() + constraint_offsets_[dof]);
  }
}

std::size_t ScalarDofHandler::n_constrained() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < n_dofs(); ++i) n += is_constrained(static_cast<int>(i)) ? 1 : 0;
  return n;
}

FESystem::FESystem(std::shared_ptr<const QuadMesh> mesh, FormKind form, DisplacementClamp clamp)
    : mesh_(std::move(mesh)),
      form_(form),
      u_dofs_(*mesh_, form == FormKind::Primal ? 1 : 2),
      phi_dofs_(*mesh_, 1) {
  const std::size_t nr = n_raw();
  free_index_.assign(nr, -1);
  raw_of_free_.clear();
  const std::size_t nuc = n_u_component();

  dirichlet_.assign(n_u(), 0);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < nuc; ++i) {
      const int d = static_cast<int>(i);
      if (!u_dofs_.on_boundary(d)) continue;
      dirichlet_[c * nuc + i] = !clamp || clamp(u_dofs_.support_point(d), c) ? 1 : 0;
    }
  }

  // free u dofs (component-major), then all p, then free phi
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < nuc; ++i) {
      const int d = static_cast<int>(i);
      if (u_dofs_.is_constrained(d) || dirichlet_[c * nuc + i]) continue;
      const int raw = static_cast<int>(c * nuc + i);
      free_index_[raw] = static_cast<int>(raw_of_free_.size());
      raw_of_free_.push_back(raw);
    }
  }
  n_free_u_ = raw_of_free_.size();
  for (std::size_t i = 0; i < n_p(); ++i) {
    const int raw = static_cast<int>(raw_offset_p() + i);
    free_index_[raw] = static_cast<int>(raw_of_free_.size());
    raw_of_free_.push_back(raw);
  }
  for (std::size_t i = 0; i < n_phi(); ++i) {
    if (phi_dofs_.is_constrained(static_cast<int>(i))) continue;
    const int raw = static_cast<int>(raw_offset_phi() + i);
    free_index_[raw] = static_cast<int>(raw_of_free_.size());
    raw_of_free_.push_back(raw);
  }
  n_free_ = raw_of_free_.size();

  expansion_offsets_.assign(nr + 1, 0);
  expansion_entries_.clear();
  for (std::size_t raw = 0; raw < nr; ++raw) {
    if (free_index_[raw] >= 0) {
      expansion_entries_.push_back({free_index_[raw], 1.0});
    } else if (raw < n_u()) {
      const int c = static_cast<int>(raw / nuc);
      const int d = static_cast<int>(raw % nuc);
      for (const auto& e : u_dofs_.constraint(d)) {
        const int master = free_index_[c * nuc + e.index];
        if (master >= 0) expansion_entries_.push_back({master, e.weight});
      }
    } else {
      const int d = static_cast<int>(raw - raw_offset_phi());
      for (const auto& e : phi_dofs_.constraint(d)) {
        expansion_entries_.push_back({free_index_[raw_offset_phi() + e.index], e.weight});
      }
    }
    expansion_offsets_[raw + 1] = static_cast<int>(expansion_entries_.size());
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(expansion_entries_.size());
  for (std::size_t raw = 0; raw < nr; ++raw) {
    for (const auto& e : expansion(static_cast<int>(raw))) trips.emplace_back(static_cast<int>(raw), e.index, e.weight);
  }
  expansion_matrix_.resize(static_cast<int>(nr), static_cast<int>(n_free_));
  expansion_matrix_.setFromTriplets(trips.begin(), trips.end());
}

void FESystem::cell_raw_dofs(int active, std::vector<int>& out) const {
  out.clear();
  const auto ud = u_dofs_.cell_dofs(active);
  const int nuc = static_cast<int>(n_u_component());
  for (int d : ud) out.push_back(d);
  for (int d : ud) out.push_back(nuc + d);
  if (has_pressure()) {
    for (int i = 0; i < 3; ++i) out.push_back(static_cast<int>(raw_offset_p()) + 3 * active + i);
  }
  for (int d : phi_dofs_.cell_dofs(active)) out.push_back(static_cast<int>(raw_offset_phi()) + d);
}

Vector FESystem::expand(const Vector& free) const { return expansion_matrix_ * free; }

Vector FESystem::condense(const Vector& raw) const { return expansion_matrix_.transpose() * raw; }

Vector FESystem::restrict_to_free(const Vector& raw) const {
  Vector out(static_cast<Eigen::Index>(n_free_));
  for (std::size_t f = 0; f < n_free_; ++f) out[static_cast<Eigen::Index>(f)] = raw[raw_of_free_[f]];
  return out;
}

void FESystem::distribute(Vector& raw) const { raw = expand(restrict_to_free(raw)); }

Vector interpolate_nodal(const ScalarDofHandler& dofs, const std::function<double(const Point&)>& f) {
  Vector out(static_cast<Eigen::Index>(dofs.n_dofs()));
  for (std::size_t i = 0; i < dofs.n_dofs(); ++i) {
    const int d = static_cast<int>(i);
    if (!dofs.is_constrained(d)) out[d] = f(dofs.support_point(d));
  }
  for (std::size_t i = 0; i < dofs.n_dofs(); ++i) {
    const int d = static_cast<int>(i);
    if (!dofs.is_constrained(d)) continue;
    double v = 0.0;
    for (const auto& e : dofs.constraint(d)) v += e.weight * out[e.index];
    out[d] = v;
  }
  return out;
}

CondensedSystem constrain(const FESystem& fe, const SparseMatrix& raw_matrix, const Vector& raw_rhs) {
  const SparseMatrix& t = fe.expansion_matrix();
  CondensedSystem out;
  const SparseMatrix kt = raw_matrix * t;
  out.matrix = SparseMatrix(t.transpose()) * kt;
  out.matrix.makeCompressed();
  out.rhs = t.transpose() * raw_rhs;
  return out;
}

double evaluate_on_cell(const QuadMesh& mesh, const ScalarDofHandler& dofs, const Vector& coeffs, int cell,
                        const Point& p) {
  const Point ref = reference_coords(mesh.cell_box(cell), p);
  const auto cd = dofs.cell_dofs(cell);
  double v = 0.0;
  for (int i = 0; i < dofs.dofs_per_cell(); ++i) v += coeffs[cd[i]] * shape_value(dofs.element(), i, ref);
  return v;
}

Point evaluate_gradient_on_cell(const QuadMesh& mesh, const ScalarDofHandler& dofs, const Vector& coeffs, int cell,
                                const Point& p) {
  const Rect box = mesh.cell_box(cell);
  const Point ref = reference_coords(box, p);
  const auto cd = dofs.cell_dofs(cell);
  Point g = Point::Zero();
  for (int i = 0; i < dofs.dofs_per_cell(); ++i) g += coeffs[cd[i]] * shape_grad(dofs.element(), i, ref);
  return {g.x() / box.width(), g.y() / box.height()};
}

double evaluate_scalar(const QuadMesh& mesh, const ScalarDofHandler& dofs, const Vector& coeffs, const Point& p) {
  const int cell = mesh.find_active(p);
  if (cell < 0) throw std::out_of_range("evaluate_scalar: point outside the domain");
  return evaluate_on_cell(mesh, dofs, coeffs, cell, p);
}

Point evaluate_scalar_gradient(const QuadMesh& mesh, const ScalarDofHandler& dofs, const Vector& coeffs,
                               const Point& p) {
  const int cell = mesh.find_active(p);
  if (cell < 0) throw std::out_of_range("evaluate_scalar_gradient: point outside the domain");
  return evaluate_gradient_on_cell(mesh, dofs, coeffs, cell, p);
}

}  // namespace fracfield
