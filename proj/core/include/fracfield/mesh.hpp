#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <unordered_map>
#include <vector>

namespace fracfield {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Boundary pieces of the unit square: Gamma1 bottom, Gamma2 right,
/// Gamma3 top, Gamma4 left.
enum class BoundaryTag { None, Gamma1, Gamma2, Gamma3, Gamma4 };

/// A node of the quadtree. Corners are stored counterclockwise starting
/// at the lower-left: (x0,y0), (x1,y0), (x1,y1), (x0,y1).
struct Cell {
  int level = 0;
  std::array<int, 4> v{-1, -1, -1, -1};
  int parent = -1;
  std::array<int, 4> child{-1, -1, -1, -1};  // SW, SE, NE, NW
  bool active = true;
  std::uint32_t ix = 0;  // cell coordinates at this cell's level
  std::uint32_t iy = 0;
};

/// Node-creation record emitted by refinement: the new vertex is the
/// arithmetic mean of its parent vertices (2 for edge midpoints, 4 for
/// cell centers). Q1 interpolation on nested quads is exactly this mean.
struct NewNode {
  int vertex = -1;
  std::array<int, 4> parents{-1, -1, -1, -1};
  int n_parents = 0;
};

/// Old-to-new cell correspondence produced by refine_and_coarsen,
/// consumed by solution transfer.
struct MeshCorrespondence {
  std::vector<int> refined;    // old active cells replaced by their children
  std::vector<int> coarsened;  // parent cells reactivated (children dropped)
  std::vector<NewNode> new_nodes;
};

/// Hierarchical quadrilateral mesh of [0,1]^2 with 2:1 balance, so every
/// edge carries at most one hanging node. Meshes are immutable values;
/// refine_and_coarsen returns a new mesh.
class QuadMesh {
 public:
  // Vertex coordinates live on a fixed dyadic grid of 2^kMaxDepth so all
  // positions are exact and hashable.
  static constexpr int kMaxDepth = 20;
  static constexpr std::uint32_t kGrid = 1u << kMaxDepth;

  std::vector<Cell> cells;
  std::vector<Vec2> vertices;
  std::vector<std::uint32_t> vgx, vgy;  // grid coordinates per vertex
  int min_level = 0;
  int max_level = 0;

  static QuadMesh build_uniform(int divisions_per_side, int extra_levels = 0);

  const std::vector<int>& active_cells() const { return active_; }
  int n_active() const { return static_cast<int>(active_.size()); }

  double cell_size(int c) const { return 1.0 / double(1u << cells[c].level); }
  Vec2 cell_lower(int c) const;
  double cell_area(int c) const { double h = cell_size(c); return h * h; }

  /// Id of the active cell covering the open neighborhood across side
  /// `side` (0 bottom, 1 right, 2 top, 3 left) of cell c, when that
  /// neighbor is at the same or a coarser level; -1 at the boundary or
  /// when the neighbor region is held by finer cells.
  int neighbor_same_or_coarser(int c, int side) const;

  /// True when the region across `side` is subdivided finer than cell c.
  bool neighbor_is_finer(int c, int side) const;

  bool is_balanced() const;

  int find_vertex(std::uint32_t gx, std::uint32_t gy) const;

  std::set<int> crack_line_cells(double x0, double y_top, double y_bot) const;

  friend std::pair<QuadMesh, MeshCorrespondence> refine_and_coarsen(
      const QuadMesh& mesh, const std::set<int>& refine_flags,
      const std::set<int>& coarsen_flags);

 private:
  std::vector<int> active_;
  std::unordered_map<std::uint64_t, int> vertex_lookup_;
  std::unordered_map<std::uint64_t, int> cell_lookup_;  // (level, ix, iy)

  int get_or_create_vertex(std::uint32_t gx, std::uint32_t gy,
                           MeshCorrespondence* corr,
                           const std::array<int, 4>& parents, int n_parents);
  bool refine_cell(int c, MeshCorrespondence* corr);
  void rebuild_active();

  static std::uint64_t vkey(std::uint32_t gx, std::uint32_t gy) {
    return (std::uint64_t(gx) << 32) | gy;
  }
  static std::uint64_t ckey(int level, std::uint32_t ix, std::uint32_t iy) {
    return (std::uint64_t(level) << 58) | (std::uint64_t(ix) << 29) | iy;
  }
};

std::pair<QuadMesh, MeshCorrespondence> refine_and_coarsen(
    const QuadMesh& mesh, const std::set<int>& refine_flags,
    const std::set<int>& coarsen_flags);

}  // namespace fracfield
