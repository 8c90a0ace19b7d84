#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace fracfield {

using Point = Eigen::Vector2d;
using CellId = int;
using NodeId = int;

/// Axis-aligned rectangle [x0,x1] x [y0,y1].
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 1.0;
  double y1 = 1.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  Point center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
  bool contains(const Point& p, double tol = 0.0) const {
    return p.x() >= x0 - tol && p.x() <= x1 + tol && p.y() >= y0 - tol && p.y() <= y1 + tol;
  }
  /// True if the open interiors of the two rectangles overlap.
  bool overlaps_interior(const Rect& other) const {
    return other.x0 < x1 && other.x1 > x0 && other.y0 < y1 && other.y1 > y0;
  }
};

/// A node of the refinement forest. Only leaves (active cells) carry degrees of freedom.
struct Cell {
  int level = 0;
  std::int64_t ix = 0;  // index in the level grid (coarse grid refined `level` times)
  std::int64_t iy = 0;
  CellId parent = -1;
  std::array<CellId, 4> children{-1, -1, -1, -1};

  bool active() const { return children[0] < 0; }
};

/// One side of the mesh skeleton. Interior sides are shared by exactly two active cells
/// which may differ in level by one; the normal points out of `left`.
struct Side {
  NodeId a = -1;
  NodeId b = -1;
  int left = -1;   // active cell index
  int right = -1;  // active cell index, -1 on the domain boundary
  int left_face = -1;
  int right_face = -1;
  Point normal = Point::Zero();
  double length = 0.0;

  bool on_boundary() const { return right < 0; }
};

/// Node patch: all active cells whose closure contains the node.
struct Patch {
  NodeId center = -1;
  std::vector<int> members;         // active cell indices, ascending
  std::vector<int> interior_sides;  // skeleton inside the patch, indices into QuadMesh::sides()
  std::vector<int> boundary_sides;  // patch sides lying on the domain boundary
  double diameter = 0.0;
};

/// Quadtree-refined rectangle mesh with at most one hanging node per edge.
///
/// Vertices of a cell are numbered lexicographically (0: lower left, 1: lower right,
/// 2: upper left, 3: upper right); faces are 0: x = x0, 1: x = x1, 2: y = y0, 3: y = y1.
/// Instances are immutable; refine() returns a new mesh whose cell ids extend the
/// ids of the input, so every mesh of a run shares the same coarse cells.
class QuadMesh {
 public:
  static constexpr int kLatticeBits = 24;
  static constexpr int kMaxLevel = kLatticeBits - 2;

  static QuadMesh build_uniform(const Rect& domain, int cells_x, int cells_y);

  /// Splits every marked cell into four children and refines neighbours as needed to
  /// keep the mesh 1-irregular. Marked ids must refer to active cells.
  QuadMesh refine(std::span<const CellId> marked) const;

  const Rect& domain() const { return domain_; }
  int coarse_cells_x() const { return nx_; }
  int coarse_cells_y() const { return ny_; }

  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<CellId>& active_cells() const { return active_; }
  std::size_t n_active() const { return active_.size(); }
  /// Active index of a cell id, -1 if the cell has been refined.
  int active_index(CellId id) const { return active_index_[id]; }
  CellId cell_id(int active) const { return active_[active]; }

  Rect cell_box(int active) const;
  Point cell_center(int active) const { return cell_box(active).center(); }
  int cell_level(int active) const { return cells_[active_[active]].level; }
  const std::array<NodeId, 4>& cell_vertices(int active) const { return cell_vertices_[active]; }
  /// Hanging node in the interior of the given face, or -1 if the face is not split.
  NodeId face_hanging_node(int active, int face) const { return face_hanging_[active][face]; }
  const std::vector<int>& cell_sides(int active) const { return cell_sides_[active]; }

  std::size_t n_nodes() const { return nodes_.size(); }
  const Point& node(NodeId q) const { return nodes_[q]; }
  bool node_is_hanging(NodeId q) const { return hanging_masters_[q][0] >= 0; }
  /// Endpoints of the coarse edge carrying a hanging node.
  const std::array<NodeId, 2>& hanging_masters(NodeId q) const { return hanging_masters_[q]; }
  bool node_on_boundary(NodeId q) const;
  std::size_t n_hanging_nodes() const;
  /// Active cells whose closure contains the node.
  std::span<const int> node_cells(NodeId q) const;

  const std::vector<Side>& sides() const { return sides_; }

  Patch patch_of(NodeId q) const;

  /// Active cell containing the point (ties resolved towards the upper/right cell), -1 outside.
  int find_active(const Point& p) const;

  // Integer lattice shared by all meshes of the family; used for exact point identity.
  struct LatticePoint {
    std::int64_t x = 0;
    std::int64_t y = 0;
  };
  static std::int64_t lattice_step(int level) { return std::int64_t{1} << (kLatticeBits - level); }
  LatticePoint cell_lattice_origin(int active) const;
  Point lattice_to_point(const LatticePoint& lp) const;
  static std::uint64_t lattice_key(const LatticePoint& lp) {
    return (static_cast<std::uint64_t>(lp.x) << 32) | static_cast<std::uint64_t>(lp.y);
  }

 private:
  QuadMesh() = default;

  void rebuild();
  CellId find_leaf(std::int64_t lx, std::int64_t ly) const;
  LatticePoint cell_origin(CellId id) const;
  std::int64_t lattice_extent_x() const { return static_cast<std::int64_t>(nx_) << kLatticeBits; }
  std::int64_t lattice_extent_y() const { return static_cast<std::int64_t>(ny_) << kLatticeBits; }
  /// Leaf across the given face, probing just outside the face at `along` (lattice units).
  CellId neighbor_leaf(CellId id, int face, std::int64_t along_offset) const;

  Rect domain_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<Cell> cells_;  // coarse cells first, row-major

  // derived data
  std::vector<CellId> active_;
  std::vector<int> active_index_;
  std::vector<std::array<NodeId, 4>> cell_vertices_;
  std::vector<std::array<NodeId, 4>> face_hanging_;
  std::vector<std::vector<int>> cell_sides_;
  std::vector<Point> nodes_;
  std::vector<LatticePoint> node_lattice_;
  std::vector<std::array<NodeId, 2>> hanging_masters_;
  std::vector<int> node_cell_offsets_;
  std::vector<int> node_cell_list_;
  std::vector<Side> sides_;
  std::unordered_map<std::uint64_t, NodeId> node_lookup_;
};

/// Jump of the normal derivative across an interior side, using the normal of the side's
/// left cell: (grad_left - grad_right) . n at each trace point.
std::vector<double> jump_across(const Side& side, std::span<const Point> grad_left,
                                std::span<const Point> grad_right);

/// Legacy-VTK unstructured grid of the active cells (ASCII, full precision coordinates).
/// Point and cell fields are optional and must match node/cell counts.
struct VtkField {
  std::string name;
  std::vector<double> values;
};
void write_vtk(std::ostream& out, const QuadMesh& mesh, std::span<const VtkField> point_fields = {},
               std::span<const VtkField> cell_fields = {});

}  // namespace fracfield
