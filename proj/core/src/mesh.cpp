#include "fracfield/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace fracfield {

namespace {

constexpr int kOppositeFace[4] = {1, 0, 3, 2};

// Face endpoints in lexicographic vertex numbering, ordered by increasing coordinate.
constexpr int kFaceVertices[4][2] = {{0, 2}, {1, 3}, {0, 1}, {2, 3}};

Point face_normal(int face) {
  switch (face) {
    case 0: return {-1.0, 0.0};
    case 1: return {1.0, 0.0};
    case 2: return {0.0, -1.0};
    default: return {0.0, 1.0};
  }
}

}  // namespace

QuadMesh QuadMesh::build_uniform(const Rect& domain, int cells_x, int cells_y) {
  if (cells_x < 1 || cells_y < 1) {
    throw std::invalid_argument("build_uniform: cell counts must be positive");
  }
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) {
    throw std::invalid_argument("build_uniform: degenerate domain");
  }
  QuadMesh mesh;
  mesh.domain_ = domain;
  mesh.nx_ = cells_x;
  mesh.ny_ = cells_y;
  mesh.cells_.reserve(static_cast<std::size_t>(cells_x) * cells_y);
  for (int j = 0; j < cells_y; ++j) {
    for (int i = 0; i < cells_x; ++i) {
      Cell c;
      c.level = 0;
      c.ix = i;
      c.iy = j;
      mesh.cells_.push_back(c);
    }
  }
  mesh.rebuild();
  return mesh;
}

QuadMesh::LatticePoint QuadMesh::cell_origin(CellId id) const {
  const Cell& c = cells_[id];
  const std::int64_t step = lattice_step(c.level);
  return {c.ix * step, c.iy * step};
}

QuadMesh::LatticePoint QuadMesh::cell_lattice_origin(int active) const {
  return cell_origin(active_[active]);
}

Point QuadMesh::lattice_to_point(const LatticePoint& lp) const {
  const double scale = static_cast<double>(std::int64_t{1} << kLatticeBits);
  const double hx = domain_.width() / nx_;
  const double hy = domain_.height() / ny_;
  // exact end points keep the boundary coordinates bit-identical to the domain
  const double x = lp.x == lattice_extent_x() ? domain_.x1 : domain_.x0 + hx * (static_cast<double>(lp.x) / scale);
  const double y = lp.y == lattice_extent_y() ? domain_.y1 : domain_.y0 + hy * (static_cast<double>(lp.y) / scale);
  return {x, y};
}

Rect QuadMesh::cell_box(int active) const {
  const CellId id = active_[active];
  const LatticePoint o = cell_origin(id);
  const std::int64_t step = lattice_step(cells_[id].level);
  const Point lo = lattice_to_point(o);
  const Point hi = lattice_to_point({o.x + step, o.y + step});
  return {lo.x(), lo.y(), hi.x(), hi.y()};
}

CellId QuadMesh::find_leaf(std::int64_t lx, std::int64_t ly) const {
  if (lx < 0 || ly < 0 || lx > lattice_extent_x() || ly > lattice_extent_y()) return -1;
  std::int64_t cx = std::min<std::int64_t>(lx >> kLatticeBits, nx_ - 1);
  std::int64_t cy = std::min<std::int64_t>(ly >> kLatticeBits, ny_ - 1);
  CellId id = static_cast<CellId>(cy * nx_ + cx);
  while (!cells_[id].active()) {
    const Cell& c = cells_[id];
    const LatticePoint o = cell_origin(id);
    const std::int64_t half = lattice_step(c.level + 1);
    const int right = lx >= o.x + half ? 1 : 0;
    const int upper = ly >= o.y + half ? 1 : 0;
    id = c.children[right + 2 * upper];
  }
  return id;
}

CellId QuadMesh::neighbor_leaf(CellId id, int face, std::int64_t along_offset) const {
  const LatticePoint o = cell_origin(id);
  const std::int64_t step = lattice_step(cells_[id].level);
  std::int64_t px = 0;
  std::int64_t py = 0;
  switch (face) {
    case 0: px = o.x - 1; py = o.y + along_offset; break;
    case 1: px = o.x + step + 1; py = o.y + along_offset; break;
    case 2: px = o.x + along_offset; py = o.y - 1; break;
    default: px = o.x + along_offset; py = o.y + step + 1; break;
  }
  if (px < 0 || py < 0 || px > lattice_extent_x() || py > lattice_extent_y()) return -1;
  return find_leaf(px, py);
}

QuadMesh QuadMesh::refine(std::span<const CellId> marked) const {
  QuadMesh out = *this;
  std::vector<CellId> work;
  work.reserve(marked.size());
  for (CellId id : marked) {
    if (id < 0 || id >= static_cast<CellId>(cells_.size()) || !cells_[id].active()) {
      throw std::invalid_argument("refine: marked cell is not active");
    }
    work.push_back(id);
  }
  if (work.empty()) return out;

  // Process in ascending id order for reproducible child numbering.
  std::sort(work.begin(), work.end());
  work.erase(std::unique(work.begin(), work.end()), work.end());
  std::reverse(work.begin(), work.end());

  while (!work.empty()) {
    const CellId id = work.back();
    if (!out.cells_[id].active()) {
      work.pop_back();
      continue;
    }
    const int level = out.cells_[id].level;
    if (level >= kMaxLevel) throw std::runtime_error("refine: maximum refinement level reached");

    // A coarser edge neighbour would end up with two hanging nodes; refine it first.
    const std::int64_t half = lattice_step(level + 1);
    bool deferred = false;
    for (int face = 0; face < 4; ++face) {
      const CellId nb = out.neighbor_leaf(id, face, half);
      if (nb >= 0 && out.cells_[nb].level < level) {
        work.push_back(nb);
        deferred = true;
      }
    }
    if (deferred) continue;
    work.pop_back();

    const Cell parent = out.cells_[id];
    for (int k = 0; k < 4; ++k) {
      Cell child;
      child.level = parent.level + 1;
      child.ix = 2 * parent.ix + (k & 1);
      child.iy = 2 * parent.iy + (k >> 1);
      child.parent = id;
      out.cells_[id].children[k] = static_cast<CellId>(out.cells_.size());
      out.cells_.push_back(child);
    }
  }
  out.rebuild();
  return out;
}

void QuadMesh::rebuild() {
  active_.clear();
  active_index_.assign(cells_.size(), -1);

  // depth-first order from the row-major coarse cells
  const CellId n_coarse = static_cast<CellId>(nx_) * ny_;
  std::vector<CellId> stack;
  for (CellId root = 0; root < n_coarse; ++root) {
    stack.push_back(root);
    while (!stack.empty()) {
      const CellId id = stack.back();
      stack.pop_back();
      const Cell& c = cells_[id];
      if (c.active()) {
        active_index_[id] = static_cast<int>(active_.size());
        active_.push_back(id);
      } else {
        for (int k = 3; k >= 0; --k) stack.push_back(c.children[k]);
      }
    }
  }

  const std::size_t n_act = active_.size();
  nodes_.clear();
  node_lattice_.clear();
  node_lookup_.clear();
  node_lookup_.reserve(2 * n_act);
  cell_vertices_.assign(n_act, {-1, -1, -1, -1});
  face_hanging_.assign(n_act, {-1, -1, -1, -1});

  auto node_id = [this](const LatticePoint& lp) {
    const auto [it, inserted] = node_lookup_.try_emplace(lattice_key(lp), static_cast<NodeId>(nodes_.size()));
    if (inserted) {
      nodes_.push_back(lattice_to_point(lp));
      node_lattice_.push_back(lp);
    }
    return it->second;
  };

  for (std::size_t k = 0; k < n_act; ++k) {
    const CellId id = active_[k];
    const LatticePoint o = cell_origin(id);
    const std::int64_t step = lattice_step(cells_[id].level);
    for (int v = 0; v < 4; ++v) {
      cell_vertices_[k][v] = node_id({o.x + (v & 1) * step, o.y + (v >> 1) * step});
    }
  }

  hanging_masters_.assign(nodes_.size(), {-1, -1});
  for (std::size_t k = 0; k < n_act; ++k) {
    const CellId id = active_[k];
    const LatticePoint o = cell_origin(id);
    const std::int64_t step = lattice_step(cells_[id].level);
    const std::int64_t half = step / 2;
    const LatticePoint mids[4] = {
        {o.x, o.y + half}, {o.x + step, o.y + half}, {o.x + half, o.y}, {o.x + half, o.y + step}};
    for (int f = 0; f < 4; ++f) {
      const auto it = node_lookup_.find(lattice_key(mids[f]));
      if (it == node_lookup_.end()) continue;
      face_hanging_[k][f] = it->second;
      hanging_masters_[it->second] = {cell_vertices_[k][kFaceVertices[f][0]], cell_vertices_[k][kFaceVertices[f][1]]};
    }
  }

  // node -> cell incidence (cells whose closure contains the node)
  std::vector<int> counts(nodes_.size() + 1, 0);
  for (std::size_t k = 0; k < n_act; ++k) {
    for (NodeId q : cell_vertices_[k]) ++counts[q + 1];
    for (NodeId q : face_hanging_[k]) {
      if (q >= 0) ++counts[q + 1];
    }
  }
  for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
  node_cell_offsets_ = counts;
  node_cell_list_.assign(counts.back(), -1);
  std::vector<int> fill(counts.begin(), counts.end() - 1);
  for (std::size_t k = 0; k < n_act; ++k) {
    for (NodeId q : cell_vertices_[k]) node_cell_list_[fill[q]++] = static_cast<int>(k);
    for (NodeId q : face_hanging_[k]) {
      if (q >= 0) node_cell_list_[fill[q]++] = static_cast<int>(k);
    }
  }

  // skeleton
  sides_.clear();
  cell_sides_.assign(n_act, {});
  auto add_side = [this](NodeId a, NodeId b, int left, int left_face, int right) {
    Side s;
    s.a = a;
    s.b = b;
    s.left = left;
    s.left_face = left_face;
    s.right = right;
    s.right_face = right >= 0 ? kOppositeFace[left_face] : -1;
    s.normal = face_normal(left_face);
    s.length = (nodes_[b] - nodes_[a]).norm();
    const int idx = static_cast<int>(sides_.size());
    sides_.push_back(s);
    cell_sides_[left].push_back(idx);
    if (right >= 0) cell_sides_[right].push_back(idx);
  };
  for (std::size_t k = 0; k < n_act; ++k) {
    const CellId id = active_[k];
    const int level = cells_[id].level;
    const std::int64_t step = lattice_step(level);
    for (int f = 0; f < 4; ++f) {
      const NodeId a = cell_vertices_[k][kFaceVertices[f][0]];
      const NodeId b = cell_vertices_[k][kFaceVertices[f][1]];
      const NodeId m = face_hanging_[k][f];
      if (m >= 0) {
        const CellId n1 = neighbor_leaf(id, f, step / 4);
        const CellId n2 = neighbor_leaf(id, f, 3 * step / 4);
        add_side(a, m, static_cast<int>(k), f, active_index_[n1]);
        add_side(m, b, static_cast<int>(k), f, active_index_[n2]);
        continue;
      }
      const CellId nb = neighbor_leaf(id, f, step / 2);
      if (nb < 0) {
        add_side(a, b, static_cast<int>(k), f, -1);
        continue;
      }
      const int nb_level = cells_[nb].level;
      if (nb_level == level && active_index_[nb] > static_cast<int>(k)) {
        add_side(a, b, static_cast<int>(k), f, active_index_[nb]);
      }
      // coarser neighbours own the split side; equal-level pairs are added once
    }
  }
}

bool QuadMesh::node_on_boundary(NodeId q) const {
  const LatticePoint& lp = node_lattice_.at(q);
  return lp.x == 0 || lp.y == 0 || lp.x == lattice_extent_x() || lp.y == lattice_extent_y();
}

std::size_t QuadMesh::n_hanging_nodes() const {
  return static_cast<std::size_t>(std::count_if(hanging_masters_.begin(), hanging_masters_.end(),
                                                [](const auto& m) { return m[0] >= 0; }));
}

std::span<const int> QuadMesh::node_cells(NodeId q) const {
  return {node_cell_list_.data() + node_cell_offsets_.at(q),
          static_cast<std::size_t>(node_cell_offsets_[q + 1] - node_cell_offsets_[q])};
}

Patch QuadMesh::patch_of(NodeId q) const {
  if (q < 0 || q >= static_cast<NodeId>(nodes_.size())) {
    throw std::out_of_range("patch_of: unknown node id");
  }
  Patch patch;
  patch.center = q;
  const auto cells = node_cells(q);
  patch.members.assign(cells.begin(), cells.end());
  std::sort(patch.members.begin(), patch.members.end());

  auto is_member = [&patch](int k) { return std::binary_search(patch.members.begin(), patch.members.end(), k); };
  std::vector<int> seen;
  for (int k : patch.members) {
    for (int s : cell_sides_[k]) seen.push_back(s);
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  for (int s : seen) {
    const Side& side = sides_[s];
    if (side.on_boundary()) {
      patch.boundary_sides.push_back(s);
    } else if (is_member(side.left) && is_member(side.right)) {
      patch.interior_sides.push_back(s);
    }
  }

  std::vector<Point> corners;
  for (int k : patch.members) {
    const Rect box = cell_box(k);
    corners.emplace_back(box.x0, box.y0);
    corners.emplace_back(box.x1, box.y0);
    corners.emplace_back(box.x0, box.y1);
    corners.emplace_back(box.x1, box.y1);
  }
  for (std::size_t i = 0; i < corners.size(); ++i) {
    for (std::size_t j = i + 1; j < corners.size(); ++j) {
      patch.diameter = std::max(patch.diameter, (corners[i] - corners[j]).norm());
    }
  }
  return patch;
}

int QuadMesh::find_active(const Point& p) const {
  if (!domain_.contains(p)) return -1;
  const double scale = static_cast<double>(std::int64_t{1} << kLatticeBits);
  const double fx = (p.x() - domain_.x0) / (domain_.width() / nx_) * scale;
  const double fy = (p.y() - domain_.y0) / (domain_.height() / ny_) * scale;
  const auto lx = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(fx)), 0, lattice_extent_x());
  const auto ly = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(fy)), 0, lattice_extent_y());
  const CellId id = find_leaf(lx, ly);
  return id < 0 ? -1 : active_index_[id];
}

std::vector<double> jump_across(const Side& side, std::span<const Point> grad_left,
                                std::span<const Point> grad_right) {
  if (side.on_boundary()) throw std::invalid_argument("jump_across: boundary side has no second trace");
  if (grad_left.size() != grad_right.size()) {
    throw std::invalid_argument("jump_across: trace sizes differ");
  }
  std::vector<double> jump(grad_left.size());
  for (std::size_t i = 0; i < jump.size(); ++i) {
    jump[i] = (grad_left[i] - grad_right[i]).dot(side.normal);
  }
  return jump;
}

void write_vtk(std::ostream& out, const QuadMesh& mesh, std::span<const VtkField> point_fields,
               std::span<const VtkField> cell_fields) {
  for (const auto& f : point_fields) {
    if (f.values.size() != mesh.n_nodes()) throw std::invalid_argument("write_vtk: point field size mismatch: " + f.name);
  }
  for (const auto& f : cell_fields) {
    if (f.values.size() != mesh.n_active()) throw std::invalid_argument("write_vtk: cell field size mismatch: " + f.name);
  }
  char buf[128];
  out << "# vtk DataFile Version 3.0\nfracfield mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_nodes() << " double\n";
  for (std::size_t q = 0; q < mesh.n_nodes(); ++q) {
    const Point& p = mesh.node(static_cast<NodeId>(q));
    std::snprintf(buf, sizeof buf, "%.17g %.17g 0\n", p.x(), p.y());
    out << buf;
  }
  const std::size_t nc = mesh.n_active();
  out << "CELLS " << nc << ' ' << 5 * nc << '\n';
  for (std::size_t k = 0; k < nc; ++k) {
    const auto& v = mesh.cell_vertices(static_cast<int>(k));
    out << "4 " << v[0] << ' ' << v[1] << ' ' << v[3] << ' ' << v[2] << '\n';
  }
  out << "CELL_TYPES " << nc << '\n';
  for (std::size_t k = 0; k < nc; ++k) out << "9\n";

  auto write_scalars = [&out, &buf](const VtkField& f) {
    out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : f.values) {
      std::snprintf(buf, sizeof buf, "%.17g\n", v);
      out << buf;
    }
  };
  if (!point_fields.empty()) {
    out << "POINT_DATA " << mesh.n_nodes() << '\n';
    for (const auto& f : point_fields) write_scalars(f);
  }
  if (!cell_fields.empty()) {
    out << "CELL_DATA " << nc << '\n';
    for (const auto& f : cell_fields) write_scalars(f);
  }
}

}  // namespace fracfield
