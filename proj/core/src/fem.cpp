#include "fracfield/fem.hpp"

#include <cmath>
#include <limits>

namespace fracfield {

const QuadratureRule& QuadratureRule::gauss2x2() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    const double a = 0.5 - 0.5 / std::sqrt(3.0);
    const double b = 0.5 + 0.5 / std::sqrt(3.0);
    r.points = {{{a, a}, {b, a}, {b, b}, {a, b}}};
    r.weights = {0.25, 0.25, 0.25, 0.25};
    return r;
  }();
  return rule;
}

ShapeValues shape_values(const Vec2& p) {
  const double x = p.x, y = p.y;
  ShapeValues s;
  s.n = {(1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y};
  s.grad = {{{-(1 - y), -(1 - x)},
             {(1 - y), -x},
             {y, x},
             {-y, (1 - x)}}};
  return s;
}

DofMap::DofMap(const QuadMesh& mesh) {
  const int nv = int(mesh.vertices.size());
  is_node_.assign(nv, false);
  masters_.assign(nv, {-1, -1});
  for (int c : mesh.active_cells()) {
    for (int v : mesh.cells[c].v) is_node_[v] = true;
  }
  n_dofs_ = nv;

  // A node sitting at the midpoint of an active cell's edge hangs off the
  // edge endpoints. 2:1 balance guarantees only midpoints can occur.
  for (int c : mesh.active_cells()) {
    const Cell& cell = mesh.cells[c];
    static const int edge[4][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    for (auto [ea, eb] : edge) {
      int a = cell.v[ea], b = cell.v[eb];
      std::uint32_t mx = (mesh.vgx[a] + mesh.vgx[b]) / 2;
      std::uint32_t my = (mesh.vgy[a] + mesh.vgy[b]) / 2;
      int m = mesh.find_vertex(mx, my);
      if (m >= 0 && is_node_[m]) {
        masters_[m] = {a, b};
      }
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (!is_node_[v]) continue;
    if (mesh.vgx[v] == 0 || mesh.vgx[v] == QuadMesh::kGrid ||
        mesh.vgy[v] == 0 || mesh.vgy[v] == QuadMesh::kGrid) {
      boundary_nodes_.push_back(v);
    }
  }
}

int DofMap::resolve(int node, ResolveBuffer& out) const {
  int n = 0;
  std::array<std::pair<int, double>, 2 * kMaxResolve> stack;
  int top = 0;
  stack[top++] = {node, 1.0};
  while (top > 0) {
    auto [v, w] = stack[--top];
    auto [a, b] = masters_[v];
    if (a < 0) {
      bool merged = false;
      for (int k = 0; k < n; ++k) {
        if (out[k].first == v) {
          out[k].second += w;
          merged = true;
          break;
        }
      }
      if (!merged) {
        if (n == kMaxResolve) {
          throw std::length_error("hanging-node constraint chain too long");
        }
        out[n++] = {v, w};
      }
    } else {
      if (top + 2 > int(stack.size())) {
        throw std::length_error("hanging-node constraint chain too long");
      }
      stack[top++] = {a, 0.5 * w};
      stack[top++] = {b, 0.5 * w};
    }
  }
  return n;
}

void DofMap::distribute_constraints(Eigen::VectorXd& v) const {
  for (int node = 0; node < int(masters_.size()); ++node) {
    auto [a, b] = masters_[node];
    if (a >= 0) v[node] = 0.5 * (v[a] + v[b]);
  }
}

SparseSystem assemble(const QuadMesh& mesh, const DofMap& dofmap,
                      const CellKernel& kernel) {
  const auto& rule = QuadratureRule::gauss2x2();
  const int n = dofmap.n_dofs();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.n_active() * 36);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

  std::array<std::array<double, 4>, 4> k_loc;
  std::array<double, 4> f_loc;
  DofMap::ResolveBuffer ri, rj;

  for (int c : mesh.active_cells()) {
    const Cell& cell = mesh.cells[c];
    CellContext ctx;
    ctx.cell = c;
    ctx.h = mesh.cell_size(c);
    ctx.rule = &rule;
    Vec2 lo = mesh.cell_lower(c);
    for (int q = 0; q < 4; ++q) {
      ctx.qp_xy[q] = {lo.x + rule.points[q].x * ctx.h,
                      lo.y + rule.points[q].y * ctx.h};
    }
    for (auto& row : k_loc) row.fill(0.0);
    f_loc.fill(0.0);
    kernel(ctx, k_loc, f_loc);

    for (int i = 0; i < 4; ++i) {
      int ni = dofmap.resolve(cell.v[i], ri);
      for (int a = 0; a < ni; ++a) {
        rhs[ri[a].first] += ri[a].second * f_loc[i];
        for (int j = 0; j < 4; ++j) {
          int nj = dofmap.resolve(cell.v[j], rj);
          for (int b = 0; b < nj; ++b) {
            triplets.emplace_back(ri[a].first, rj[b].first,
                                  ri[a].second * rj[b].second * k_loc[i][j]);
          }
        }
      }
    }
  }

  // Hanging slots get a placeholder identity row; their value is set from
  // the masters after the solve.
  for (int node = 0; node < n; ++node) {
    if (!dofmap.is_node(node) || dofmap.is_hanging(node)) {
      triplets.emplace_back(node, node, 1.0);
    }
  }

  SparseSystem system;
  system.matrix.resize(n, n);
  system.matrix.setFromTriplets(triplets.begin(), triplets.end());
  system.rhs = std::move(rhs);
  return system;
}

void apply_dirichlet(SparseSystem& system,
                     const std::vector<std::pair<int, double>>& values) {
  const int n = int(system.matrix.rows());
  std::vector<char> is_dir(n, 0);
  std::vector<double> g(n, 0.0);
  for (auto [dof, value] : values) {
    is_dir[dof] = 1;
    g[dof] = value;
  }
  for (int col = 0; col < system.matrix.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(system.matrix, col);
         it; ++it) {
      const int row = int(it.row());
      if (is_dir[col]) {
        if (row == col) {
          it.valueRef() = 1.0;
        } else {
          if (!is_dir[row]) system.rhs[row] -= it.value() * g[col];
          it.valueRef() = 0.0;
        }
      } else if (is_dir[row]) {
        it.valueRef() = 0.0;
      }
    }
  }
  for (auto [dof, value] : values) system.rhs[dof] = value;
}

Eigen::VectorXd LinearSolver::solve(const SparseSystem& system, double tol) {
  const auto& A = system.matrix;
  if (!analyzed_ || pattern_nnz_ != A.nonZeros() || pattern_rows_ != A.rows()) {
    ldlt_.analyzePattern(A);
    analyzed_ = true;
    pattern_nnz_ = A.nonZeros();
    pattern_rows_ = A.rows();
  }
  ldlt_.factorize(A);
  if (ldlt_.info() != Eigen::Success) {
    throw SolverError("sparse factorization failed (matrix not SPD?)",
                      std::numeric_limits<double>::quiet_NaN());
  }
  Eigen::VectorXd x = ldlt_.solve(system.rhs);
  const double bnorm = system.rhs.norm();
  auto rel_residual = [&] {
    double res = (A * x - system.rhs).norm();
    return bnorm > 0 ? res / bnorm : res;
  };
  double rel = rel_residual();
  if (!(rel <= tol) || !x.allFinite()) {
    // One step of iterative refinement before giving up.
    x += ldlt_.solve(system.rhs - A * x);
    rel = rel_residual();
    if (!(rel <= tol) || !x.allFinite()) {
      throw SolverError("linear solve residual too large", rel);
    }
  }
  return x;
}

Eigen::VectorXd solve(const SparseSystem& system, double tol) {
  LinearSolver solver;
  return solver.solve(system, tol);
}

CellField evaluate_on_cell(const QuadMesh& mesh, int cell,
                           const Eigen::VectorXd& nodal,
                           const QuadratureRule& rule) {
  CellField field;
  const Cell& c = mesh.cells[cell];
  const double inv_h = 1.0 / mesh.cell_size(cell);
  for (int q = 0; q < 4; ++q) {
    ShapeValues s = shape_values(rule.points[q]);
    double value = 0.0, gx = 0.0, gy = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double u = nodal[c.v[i]];
      value += s.n[i] * u;
      gx += s.grad[i].x * u;
      gy += s.grad[i].y * u;
    }
    field.value[q] = value;
    field.gradient[q] = {gx * inv_h, gy * inv_h};
  }
  return field;
}

}  // namespace fracfield
