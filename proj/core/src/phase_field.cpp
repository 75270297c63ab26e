#include "fracfield/phase_field.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace fracfield {

namespace {
// Keeps the reaction matrix positive definite when the driving energy is
// identically zero (pure-Neumann AT1 source is otherwise rank deficient;
// the clamp maps the huge unconstrained solution back onto phi = 1).
constexpr double kReactionFloor = 1e-12;
}  // namespace

std::vector<char> crack_cell_flags(const QuadMesh& mesh,
                                   const std::set<int>& crack_mask) {
  std::vector<char> flags(mesh.cells.size(), 0);
  if (crack_mask.empty()) return flags;
  for (int c : mesh.active_cells()) {
    for (int v : mesh.cells[c].v) {
      if (crack_mask.count(v)) {
        flags[c] = 1;
        break;
      }
    }
  }
  return flags;
}

int close_crack_pinches(const QuadMesh& mesh, std::set<int>& crack_mask) {
  int added_total = 0;
  for (bool changed = true; changed;) {
    changed = false;
    const std::vector<char> dead = crack_cell_flags(mesh, crack_mask);
    // Quadrant occupancy per vertex. A cell holding the vertex as corner k
    // sits in the quadrant diagonally opposite corner k, so bits {0,2} or
    // {1,3} both set means two crack cells meet only at this node.
    std::unordered_map<int, int> dead_q, live_q;
    for (int c : mesh.active_cells()) {
      auto& q = dead[c] ? dead_q : live_q;
      for (int k = 0; k < 4; ++k) q[mesh.cells[c].v[k]] |= 1 << k;
    }
    for (const auto& [v, bits] : dead_q) {
      const bool diag =
          ((bits & 1) && (bits & 4)) || ((bits & 2) && (bits & 8));
      if (!diag || crack_mask.count(v)) continue;
      if (live_q.find(v) == live_q.end()) continue;  // nothing to decouple
      crack_mask.insert(v);
      ++added_total;
      changed = true;
    }
  }
  return added_total;
}

SparseSystem assemble_phase_system(const QuadMesh& mesh, const DofMap& dofmap,
                                   const Eigen::VectorXd& phi_airy,
                                   const Eigen::VectorXd& phi_prev,
                                   const XiField& xi_field,
                                   const MaterialModel& m,
                                   const LengthScaleConfig& lsc,
                                   const std::set<int>& crack_mask) {
  const double diff_c = 2.0 * m.Gc / lsc.c_v;
  const double src_c = m.Gc / lsc.c_v;
  const auto& active = mesh.active_cells();
  std::vector<double> xi_by_cell(mesh.cells.size(), 0.0);
  for (int k = 0; k < int(active.size()); ++k) {
    if (!(xi_field.cell_xi[k] > 0.0)) {
      throw std::invalid_argument("nonpositive xi on an active cell");
    }
    xi_by_cell[active[k]] = xi_field.cell_xi[k];
  }
  // Crack cells keep the AT1 source and diffusion (they carry the profile
  // around the pinned nodes and its surface energy) but no elastic
  // driving term: the stress function is not solved there and broken
  // material stores no recoverable energy.
  const std::vector<char> dead = crack_cell_flags(mesh, crack_mask);

  auto kernel = [&](const CellContext& ctx,
                    std::array<std::array<double, 4>, 4>& k_loc,
                    std::array<double, 4>& f_loc) {
    const double area = ctx.h * ctx.h;
    const double inv_h = 1.0 / ctx.h;
    const double xi = xi_by_cell[ctx.cell];
    CellField airy = evaluate_on_cell(mesh, ctx.cell, phi_airy, *ctx.rule);
    CellField prev = evaluate_on_cell(mesh, ctx.cell, phi_prev, *ctx.rule);
    for (int q = 0; q < 4; ++q) {
      const double w = ctx.rule->weights[q] * area;
      const double react =
          dead[ctx.cell]
              ? kReactionFloor
              : std::max(phase_reaction_coeff(airy.gradient[q],
                                              prev.value[q], m),
                         kReactionFloor);
      ShapeValues s = shape_values(ctx.rule->points[q]);
      for (int i = 0; i < 4; ++i) {
        f_loc[i] += w * src_c / xi * s.n[i];
        for (int j = 0; j < 4; ++j) {
          const double gdot = (s.grad[i].x * s.grad[j].x +
                               s.grad[i].y * s.grad[j].y) *
                              inv_h * inv_h;
          k_loc[i][j] += w * (react * s.n[i] * s.n[j] + diff_c * xi * gdot);
        }
      }
    }
  };

  SparseSystem system = assemble(mesh, dofmap, kernel);
  std::vector<std::pair<int, double>> pins;
  pins.reserve(crack_mask.size());
  for (int node : crack_mask) {
    if (!dofmap.is_hanging(node)) pins.emplace_back(node, 0.0);
  }
  apply_dirichlet(system, pins);
  return system;
}

std::vector<char> maskable_nodes(const QuadMesh& mesh, const DofMap& dofmap,
                                 int target_level) {
  std::vector<char> ok(mesh.vertices.size(), 0);
  for (int c : mesh.active_cells()) {
    const char at_target = mesh.cells[c].level == target_level ? 1 : 0;
    for (int v : mesh.cells[c].v) {
      // first touch initializes, any coarse incident cell vetoes
      ok[v] = (ok[v] || at_target) && at_target;
    }
  }
  for (int v = 0; v < int(mesh.vertices.size()); ++v) {
    if (!dofmap.is_node(v) || dofmap.is_hanging(v)) ok[v] = 0;
  }
  return ok;
}

PhaseState clamp_and_project(const Eigen::VectorXd& phi_new,
                             const Eigen::VectorXd& phi_old_step,
                             const PhaseState& state,
                             const std::vector<char>* maskable) {
  if (phi_new.size() != phi_old_step.size()) {
    throw std::invalid_argument("phase vectors not conformal");
  }
  PhaseState out = state;
  out.phi = phi_new;
  for (Eigen::Index i = 0; i < out.phi.size(); ++i) {
    double v = std::clamp(out.phi[i], 0.0, 1.0);
    v = std::min(v, phi_old_step[i]);
    if (v < state.crack_threshold &&
        (!maskable || (*maskable)[size_t(i)])) {
      v = 0.0;
      out.crack_mask.insert(int(i));
    }
    out.phi[i] = v;
  }
  for (int node : state.crack_mask) out.phi[node] = 0.0;
  return out;
}

double bulk_energy(const QuadMesh& mesh, const Eigen::VectorXd& phi_airy,
                   const Eigen::VectorXd& phi, const MaterialModel& m,
                   const std::set<int>* crack_mask) {
  const auto& rule = QuadratureRule::gauss2x2();
  const std::vector<char> dead =
      crack_mask ? crack_cell_flags(mesh, *crack_mask) : std::vector<char>();
  double energy = 0.0;
  for (int c : mesh.active_cells()) {
    if (!dead.empty() && dead[c]) continue;
    const double area = mesh.cell_area(c);
    CellField airy = evaluate_on_cell(mesh, c, phi_airy, rule);
    CellField ph = evaluate_on_cell(mesh, c, phi, rule);
    for (int q = 0; q < 4; ++q) {
      const double w = rule.weights[q] * area;
      energy += w * 0.5 * m.mu * degradation(ph.value[q], m.kappa) *
                strain_energy_density(airy.gradient[q], ph.value[q], m);
    }
  }
  return energy;
}

double surface_energy(const QuadMesh& mesh, const Eigen::VectorXd& phi,
                      const XiField& xi_field, const LengthScaleConfig& lsc,
                      double Gc, bool include_eta) {
  const auto& rule = QuadratureRule::gauss2x2();
  const double gc_cv = Gc / lsc.c_v;
  const double eta = include_eta ? lsc.eta : 0.0;
  const auto& active = mesh.active_cells();
  double energy = 0.0;
  for (int k = 0; k < int(active.size()); ++k) {
    const int c = active[k];
    const double xi = xi_field.cell_xi[k];
    if (!(xi > 0.0)) throw std::invalid_argument("nonpositive xi");
    const double area = mesh.cell_area(c);
    CellField f = evaluate_on_cell(mesh, c, phi, rule);
    for (int q = 0; q < 4; ++q) {
      const double w = rule.weights[q] * area;
      const double g2 = f.gradient[q].x * f.gradient[q].x +
                        f.gradient[q].y * f.gradient[q].y;
      energy += w * gc_cv * ((1.0 - f.value[q] + eta) / xi + xi * g2);
    }
  }
  return energy;
}

}  // namespace fracfield
