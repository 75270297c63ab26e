#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fracfield/mesh.hpp"

namespace fracfield {

struct SolverError : std::runtime_error {
  double residual;
  SolverError(const std::string& what, double res)
      : std::runtime_error(what), residual(res) {}
};

/// 2x2 Gauss rule on the reference square [0,1]^2. Weights sum to 1 and
/// the rule is exact for bilinear x bilinear products on scaled squares.
struct QuadratureRule {
  std::array<Vec2, 4> points;
  std::array<double, 4> weights;
  static const QuadratureRule& gauss2x2();
};

/// Q1 basis values and reference gradients at a reference point.
struct ShapeValues {
  std::array<double, 4> n;
  std::array<Vec2, 4> grad;  // d/dxi, d/deta on the reference square
};
ShapeValues shape_values(const Vec2& ref_point);

/// Node numbering plus hanging-node constraints. Every mesh node owns a
/// slot in the global vector; a hanging node's slot is slaved to the two
/// endpoints of the long edge it sits on (weights 1/2, 1/2).
class DofMap {
 public:
  explicit DofMap(const QuadMesh& mesh);

  int n_dofs() const { return n_dofs_; }
  bool is_hanging(int node) const { return masters_[node].first >= 0; }
  std::pair<int, int> masters(int node) const { return masters_[node]; }
  bool is_node(int vertex) const { return is_node_[vertex]; }

  /// Resolves a node into its unconstrained (dof, weight) pairs. Chains
  /// are expanded: a master that is itself hanging (possible where three
  /// refinement levels meet near a corner) is resolved through.
  static constexpr int kMaxResolve = 32;
  using ResolveBuffer = std::array<std::pair<int, double>, kMaxResolve>;
  int resolve(int node, ResolveBuffer& out) const;

  /// Overwrites hanging slots with the average of their masters.
  void distribute_constraints(Eigen::VectorXd& v) const;

  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }

 private:
  int n_dofs_ = 0;
  std::vector<std::pair<int, int>> masters_;  // (-1,-1) if unconstrained
  std::vector<bool> is_node_;
  std::vector<int> boundary_nodes_;
};

struct SparseSystem {
  Eigen::SparseMatrix<double> matrix;  // column-major, symmetric
  Eigen::VectorXd rhs;
};

/// Per-cell element callback: fills the 4x4 local matrix and local load
/// vector for one active cell. `qp_xy` are the physical quadrature
/// points, `grad_scale` = 1/h converts reference gradients to physical.
struct CellContext {
  int cell = -1;
  double h = 0.0;
  std::array<Vec2, 4> qp_xy;
  const QuadratureRule* rule = nullptr;
};
using CellKernel =
    std::function<void(const CellContext&, std::array<std::array<double, 4>, 4>&,
                       std::array<double, 4>&)>;

SparseSystem assemble(const QuadMesh& mesh, const DofMap& dofmap,
                      const CellKernel& kernel);

/// Symmetric Dirichlet elimination with right-hand-side lift. Eliminated
/// rows keep a unit diagonal so the sparsity pattern stays intact.
void apply_dirichlet(SparseSystem& system,
                     const std::vector<std::pair<int, double>>& values);

/// Sparse SPD solve. Uses a cached symbolic factorization when the
/// pattern is unchanged between calls.
class LinearSolver {
 public:
  Eigen::VectorXd solve(const SparseSystem& system, double tol = 1e-10);

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool analyzed_ = false;
  Eigen::Index pattern_nnz_ = -1;
  Eigen::Index pattern_rows_ = -1;
};

/// One-shot convenience wrapper around LinearSolver.
Eigen::VectorXd solve(const SparseSystem& system, double tol = 1e-10);

/// Field evaluation helpers at quadrature points of one cell.
struct CellField {
  std::array<double, 4> value;    // per quadrature point
  std::array<Vec2, 4> gradient;
};
CellField evaluate_on_cell(const QuadMesh& mesh, int cell,
                           const Eigen::VectorXd& nodal,
                           const QuadratureRule& rule);

}  // namespace fracfield
