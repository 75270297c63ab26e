#include "fracfield/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fracfield {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

Vec2 QuadMesh::cell_lower(int c) const {
  const Cell& cell = cells[c];
  double h = cell_size(c);
  return {cell.ix * h, cell.iy * h};
}

int QuadMesh::find_vertex(std::uint32_t gx, std::uint32_t gy) const {
  auto it = vertex_lookup_.find(vkey(gx, gy));
  return it == vertex_lookup_.end() ? -1 : it->second;
}

int QuadMesh::get_or_create_vertex(std::uint32_t gx, std::uint32_t gy,
                                   MeshCorrespondence* corr,
                                   const std::array<int, 4>& parents,
                                   int n_parents) {
  auto [it, inserted] = vertex_lookup_.try_emplace(vkey(gx, gy),
                                                   int(vertices.size()));
  if (inserted) {
    vertices.push_back({double(gx) / kGrid, double(gy) / kGrid});
    vgx.push_back(gx);
    vgy.push_back(gy);
    if (corr && n_parents > 0) {
      corr->new_nodes.push_back({it->second, parents, n_parents});
    }
  }
  return it->second;
}

QuadMesh QuadMesh::build_uniform(int divisions_per_side, int extra_levels) {
  if (divisions_per_side < 2 || !is_power_of_two(divisions_per_side)) {
    throw std::invalid_argument(
        "divisions_per_side must be a power of two >= 2");
  }
  int level = 0;
  while ((1 << level) < divisions_per_side) ++level;

  QuadMesh mesh;
  mesh.min_level = level;
  mesh.max_level = level + extra_levels;
  if (mesh.max_level > kMaxDepth - 1) {
    throw std::invalid_argument("requested refinement depth too deep");
  }

  const std::uint32_t n = divisions_per_side;
  const std::uint32_t stride = kGrid / n;
  for (std::uint32_t j = 0; j <= n; ++j) {
    for (std::uint32_t i = 0; i <= n; ++i) {
      mesh.get_or_create_vertex(i * stride, j * stride, nullptr, {}, 0);
    }
  }
  for (std::uint32_t j = 0; j < n; ++j) {
    for (std::uint32_t i = 0; i < n; ++i) {
      Cell c;
      c.level = level;
      c.ix = i;
      c.iy = j;
      c.v = {mesh.find_vertex(i * stride, j * stride),
             mesh.find_vertex((i + 1) * stride, j * stride),
             mesh.find_vertex((i + 1) * stride, (j + 1) * stride),
             mesh.find_vertex(i * stride, (j + 1) * stride)};
      int id = int(mesh.cells.size());
      mesh.cells.push_back(c);
      mesh.cell_lookup_[ckey(level, i, j)] = id;
    }
  }
  mesh.rebuild_active();
  return mesh;
}

void QuadMesh::rebuild_active() {
  active_.clear();
  for (int i = 0; i < int(cells.size()); ++i) {
    if (cells[i].active) active_.push_back(i);
  }
}

int QuadMesh::neighbor_same_or_coarser(int c, int side) const {
  const Cell& cell = cells[c];
  const std::uint32_t n = 1u << cell.level;
  std::int64_t nx = cell.ix, ny = cell.iy;
  switch (side) {
    case 0: ny -= 1; break;
    case 1: nx += 1; break;
    case 2: ny += 1; break;
    case 3: nx -= 1; break;
  }
  if (nx < 0 || ny < 0 || nx >= std::int64_t(n) || ny >= std::int64_t(n)) {
    return -1;
  }
  std::uint32_t ix = std::uint32_t(nx), iy = std::uint32_t(ny);
  for (int level = cell.level; level >= 0; --level) {
    auto it = cell_lookup_.find(ckey(level, ix, iy));
    if (it != cell_lookup_.end()) {
      return cells[it->second].active ? it->second : -1;
    }
    ix >>= 1;
    iy >>= 1;
  }
  return -1;
}

bool QuadMesh::neighbor_is_finer(int c, int side) const {
  const Cell& cell = cells[c];
  const std::uint32_t n = 1u << cell.level;
  std::int64_t nx = cell.ix, ny = cell.iy;
  switch (side) {
    case 0: ny -= 1; break;
    case 1: nx += 1; break;
    case 2: ny += 1; break;
    case 3: nx -= 1; break;
  }
  if (nx < 0 || ny < 0 || nx >= std::int64_t(n) || ny >= std::int64_t(n)) {
    return false;
  }
  auto it = cell_lookup_.find(ckey(cell.level, std::uint32_t(nx),
                                   std::uint32_t(ny)));
  return it != cell_lookup_.end() && !cells[it->second].active;
}

bool QuadMesh::is_balanced() const {
  for (int c : active_) {
    for (int side = 0; side < 4; ++side) {
      if (!neighbor_is_finer(c, side)) continue;
      // The region across this side is subdivided: the adjacent
      // descendants must sit exactly one level below this cell.
      const Cell& cell = cells[c];
      std::int64_t nx = cell.ix, ny = cell.iy;
      switch (side) {
        case 0: ny -= 1; break;
        case 1: nx += 1; break;
        case 2: ny += 1; break;
        case 3: nx -= 1; break;
      }
      int nb = cell_lookup_.at(ckey(cell.level, std::uint32_t(nx),
                                    std::uint32_t(ny)));
      // Children of nb adjacent to the shared edge must be active.
      static const int adj[4][2] = {{3, 2}, {0, 3}, {0, 1}, {1, 2}};
      for (int k = 0; k < 2; ++k) {
        int child = cells[nb].child[adj[side][k]];
        if (child < 0 || !cells[child].active) return false;
      }
    }
  }
  return true;
}

bool QuadMesh::refine_cell(int c, MeshCorrespondence* corr) {
  Cell& cell = cells[c];
  if (!cell.active) return false;
  if (cell.level >= max_level) return false;

  // 2:1 balance: coarser side neighbors are refined first.
  for (int side = 0; side < 4; ++side) {
    int nb = neighbor_same_or_coarser(c, side);
    if (nb >= 0 && cells[nb].level < cells[c].level) {
      refine_cell(nb, corr);
    }
  }

  Cell& parent = cells[c];  // re-take reference after possible reallocation
  const int level = parent.level;
  const std::uint32_t half = kGrid >> (level + 1);
  const std::uint32_t gx0 = parent.ix * (kGrid >> level);
  const std::uint32_t gy0 = parent.iy * (kGrid >> level);
  const std::array<int, 4> pv = parent.v;

  auto mid2 = [&](std::uint32_t gx, std::uint32_t gy, int a, int b) {
    return get_or_create_vertex(gx, gy, corr, {pv[a], pv[b], -1, -1}, 2);
  };
  int vs = mid2(gx0 + half, gy0, 0, 1);             // south midpoint
  int ve = mid2(gx0 + 2 * half, gy0 + half, 1, 2);  // east
  int vn = mid2(gx0 + half, gy0 + 2 * half, 2, 3);  // north
  int vw = mid2(gx0, gy0 + half, 3, 0);             // west
  int vc = get_or_create_vertex(gx0 + half, gy0 + half, corr,
                                {pv[0], pv[1], pv[2], pv[3]}, 4);

  const std::array<std::array<int, 4>, 4> corners = {{
      {pv[0], vs, vc, vw},   // SW
      {vs, pv[1], ve, vc},   // SE
      {vc, ve, pv[2], vn},   // NE
      {vw, vc, vn, pv[3]},   // NW
  }};
  const std::array<std::array<std::uint32_t, 2>, 4> offs = {{
      {0, 0}, {1, 0}, {1, 1}, {0, 1}}};

  cells[c].active = false;
  for (int k = 0; k < 4; ++k) {
    Cell child;
    child.level = level + 1;
    child.ix = cells[c].ix * 2 + offs[k][0];
    child.iy = cells[c].iy * 2 + offs[k][1];
    child.v = corners[k];
    child.parent = c;
    int id = int(cells.size());
    cells[c].child[k] = id;
    cells.push_back(child);
    cell_lookup_[ckey(level + 1, child.ix, child.iy)] = id;
  }
  if (corr) corr->refined.push_back(c);
  return true;
}

std::pair<QuadMesh, MeshCorrespondence> refine_and_coarsen(
    const QuadMesh& mesh, const std::set<int>& refine_flags,
    const std::set<int>& coarsen_flags) {
  QuadMesh out = mesh;
  MeshCorrespondence corr;

  for (int c : refine_flags) {
    if (c < 0 || c >= int(out.cells.size()) || !out.cells[c].active) continue;
    out.refine_cell(c, &corr);  // flags at max_level are dropped inside
  }

  // Coarsening: all four siblings must be flagged, active, and the merge
  // must respect both the level floor and 2:1 balance.
  std::set<int> parents;
  for (int c : coarsen_flags) {
    if (c < 0 || c >= int(out.cells.size()) || !out.cells[c].active) continue;
    int p = out.cells[c].parent;
    if (p >= 0) parents.insert(p);
  }
  for (int p : parents) {
    const Cell& parent = out.cells[p];
    if (parent.level < out.min_level) continue;
    bool ok = true;
    for (int k = 0; k < 4; ++k) {
      int ch = parent.child[k];
      if (ch < 0 || !out.cells[ch].active || !coarsen_flags.count(ch)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    // Merging is unsafe if any cell adjacent to a child across the
    // parent's boundary is finer than the children.
    for (int k = 0; k < 4 && ok; ++k) {
      for (int side = 0; side < 4; ++side) {
        if (out.neighbor_is_finer(parent.child[k], side)) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) continue;
    for (int k = 0; k < 4; ++k) {
      int ch = parent.child[k];
      out.cells[ch].active = false;
      out.cell_lookup_.erase(
          QuadMesh::ckey(out.cells[ch].level, out.cells[ch].ix,
                         out.cells[ch].iy));
      out.cells[p].child[k] = -1;
    }
    out.cells[p].active = true;
    corr.coarsened.push_back(p);
  }

  out.rebuild_active();
  return {std::move(out), std::move(corr)};
}

std::set<int> QuadMesh::crack_line_cells(double x0, double y_top,
                                         double y_bot) const {
  if (!(x0 > 0.0 && x0 < 1.0) || !(y_bot >= 0.0 && y_bot <= y_top) ||
      y_top > 1.0) {
    throw std::invalid_argument("crack segment outside the unit square");
  }
  const double gx = x0 * kGrid;
  const double gt = y_top * kGrid;
  const double gb = y_bot * kGrid;
  std::set<int> result;
  for (int c : active_) {
    const Cell& cell = cells[c];
    const std::uint32_t s = kGrid >> cell.level;
    const double x0c = double(cell.ix) * s, x1c = x0c + s;
    const double y0c = double(cell.iy) * s, y1c = y0c + s;
    if (x0c <= gx && gx <= x1c && y0c <= gt && y1c >= gb) {
      result.insert(c);
    }
  }
  if (result.empty()) {
    throw std::invalid_argument("crack segment intersects no cells");
  }
  return result;
}

}  // namespace fracfield
