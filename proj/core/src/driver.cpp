#include "fracfield/driver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace fracfield {

namespace {

std::vector<bool> used_vertices(const QuadMesh& mesh) {
  std::vector<bool> used(mesh.vertices.size(), false);
  for (int c : mesh.active_cells()) {
    for (int v : mesh.cells[c].v) used[v] = true;
  }
  return used;
}

double relative_change(const Eigen::VectorXd& next,
                       const Eigen::VectorXd& prev) {
  const double scale = std::max(next.norm(), 1e-300);
  return (next - prev).norm() / scale;
}

}  // namespace

std::vector<std::pair<int, double>> top_boundary_values(
    const QuadMesh& mesh, const DofMap& dofmap, double load, double x0,
    const std::set<int>* crack_mask) {
  const auto gx0 = std::uint32_t(std::llround(x0 * QuadMesh::kGrid));
  std::vector<std::pair<int, double>> bc;
  for (int v = 0; v < int(mesh.vertices.size()); ++v) {
    if (mesh.vgy[v] != QuadMesh::kGrid) continue;
    if (!dofmap.is_node(v) || dofmap.is_hanging(v)) continue;
    if (mesh.vgx[v] == gx0) continue;  // crack mouth
    if (crack_mask && crack_mask->count(v)) continue;
    bc.emplace_back(v, mesh.vgx[v] < gx0 ? -load : load);
  }
  return bc;
}

PicardResult picard_solve_airy(const QuadMesh& mesh, const DofMap& dofmap,
                               const Eigen::VectorXd& phi_airy_init,
                               const Eigen::VectorXd& phi,
                               const std::vector<std::pair<int, double>>& bc,
                               const MaterialModel& m, const SolverConfig& sc,
                               LinearSolver& solver,
                               const std::set<int>& crack_mask) {
  // Cells touching the crack mask are the discrete slit: they drop out of
  // the stress-function problem entirely, so the field may jump across
  // the crack and its faces are traction-free. Keeping them with residual
  // stiffness instead would force the field continuous through the slit
  // and pile the whole boundary jump into two cell columns, whose strain
  // energy eventually masks the flank nodes and widens the crack.
  const std::vector<char> dead = crack_cell_flags(mesh, crack_mask);
  // Nodes with no surviving cell (the masked nodes themselves, and any
  // node walled in by them) get a decoupled zero pin to keep the system
  // definite.
  std::vector<char> supported(mesh.vertices.size(), 0);
  for (int c : mesh.active_cells()) {
    if (dead[c]) continue;
    for (int v : mesh.cells[c].v) supported[v] = 1;
  }
  std::vector<std::pair<int, double>> pins = bc;
  {
    std::vector<char> pinned(mesh.vertices.size(), 0);
    for (const auto& [v, val] : bc) pinned[v] = 1;
    for (int v = 0; v < int(mesh.vertices.size()); ++v) {
      if (!supported[v] && !pinned[v] && dofmap.is_node(v) &&
          !dofmap.is_hanging(v)) {
        pins.emplace_back(v, 0.0);
      }
    }
  }

  Eigen::VectorXd prev = phi_airy_init;
  double err = 0.0;
  for (int it = 1; it <= sc.max_picard; ++it) {
    auto kernel = [&](const CellContext& ctx,
                      std::array<std::array<double, 4>, 4>& k_loc,
                      std::array<double, 4>&) {
      if (dead[ctx.cell]) return;
      const double area = ctx.h * ctx.h;
      const double inv_h2 = 1.0 / (ctx.h * ctx.h);
      CellField airy = evaluate_on_cell(mesh, ctx.cell, prev, *ctx.rule);
      CellField ph = evaluate_on_cell(mesh, ctx.cell, phi, *ctx.rule);
      for (int q = 0; q < 4; ++q) {
        const double w = ctx.rule->weights[q] * area;
        const double a =
            picard_diffusion_coeff(airy.gradient[q], ph.value[q], m);
        ShapeValues s = shape_values(ctx.rule->points[q]);
        for (int i = 0; i < 4; ++i) {
          for (int j = 0; j < 4; ++j) {
            k_loc[i][j] += w * a *
                           (s.grad[i].x * s.grad[j].x +
                            s.grad[i].y * s.grad[j].y) *
                           inv_h2;
          }
        }
      }
    };
    SparseSystem system = assemble(mesh, dofmap, kernel);
    apply_dirichlet(system, pins);
    Eigen::VectorXd x = solver.solve(system, sc.linear_tol);
    dofmap.distribute_constraints(x);
    err = relative_change(x, prev);
    prev = std::move(x);
    // Linear problem: the coefficient never depended on the iterate.
    if (m.beta == 0.0) return {std::move(prev), it};
    if (err <= sc.tol_picard) return {std::move(prev), it};
  }
  std::ostringstream msg;
  msg << "Picard iteration stalled after " << sc.max_picard
      << " solves, relative change " << err;
  throw StaggerError(msg.str());
}

StaggerResult staggered_step(const QuadMesh& mesh, const DofMap& dofmap,
                             const FieldState& prev,
                             const std::vector<std::pair<int, double>>& bc,
                             const RunConfig& cfg, LinearSolver& solver) {
  StaggerResult res;
  res.state = prev;
  FieldState& cur = res.state;
  double err_airy = 0.0, err_phi = 0.0;
  for (int s = 1; s <= cfg.solver.max_stagger; ++s) {
    res.iterations = s;

    PicardResult pr = picard_solve_airy(mesh, dofmap, cur.phi_airy,
                                        cur.phase.phi, bc, cfg.material,
                                        cfg.solver, solver,
                                        cur.phase.crack_mask);
    res.picard_total += pr.iterations;
    err_airy = relative_change(pr.phi_airy, cur.phi_airy);
    cur.phi_airy = std::move(pr.phi_airy);

    // xi is held fixed through the sweeps and refreshed once per accepted
    // load step; refreshing it inside the loop makes the alternation
    // non-contractive and it limit-cycles.
    SparseSystem system = assemble_phase_system(
        mesh, dofmap, cur.phi_airy, cur.phase.phi, cur.xi, cfg.material,
        cfg.length_scale, cur.phase.crack_mask);
    Eigen::VectorXd x = solver.solve(system, cfg.solver.linear_tol);
    dofmap.distribute_constraints(x);
    // Placeholder slots of retired vertices carry no equation; keep their
    // previous values so the projection cannot pin them spuriously.
    for (int v = 0; v < int(x.size()); ++v) {
      if (!dofmap.is_node(v)) x[v] = cur.phase.phi[v];
    }
    PhaseState next = clamp_and_project(x, prev.phase.phi, cur.phase);
    if (close_crack_pinches(mesh, next.crack_mask) > 0) {
      for (int v : next.crack_mask) next.phi[v] = 0.0;
    }
    err_phi = relative_change(next.phi, cur.phase.phi);
    cur.phase = std::move(next);

    if (std::max(err_airy, err_phi) <= cfg.solver.tol_stagger) return res;
  }
  std::ostringstream msg;
  msg << "staggered iteration stalled after " << cfg.solver.max_stagger
      << " sweeps, changes " << err_airy << " / " << err_phi;
  throw StaggerError(msg.str());
}

FieldState initialize(const QuadMesh& mesh, const RunConfig& cfg) {
  FieldState state;
  const int nv = int(mesh.vertices.size());
  state.phi_airy = Eigen::VectorXd::Zero(nv);
  const DofMap dofmap(mesh);
  state.phase.phi = Eigen::VectorXd::Ones(nv);
  state.phase.crack_threshold = cfg.crack.threshold;

  const std::set<int> cells =
      mesh.crack_line_cells(cfg.crack.x0, cfg.crack.y_top, cfg.crack.y_bot);
  const auto gx0 = std::uint32_t(std::llround(cfg.crack.x0 * QuadMesh::kGrid));
  const auto gyb =
      std::uint32_t(std::llround(cfg.crack.y_bot * QuadMesh::kGrid));
  const auto gyt =
      std::uint32_t(std::llround(cfg.crack.y_top * QuadMesh::kGrid));
  const std::vector<bool> used = used_vertices(mesh);
  for (int v = 0; v < nv; ++v) {
    if (used[v] && mesh.vgx[v] == gx0 && mesh.vgy[v] >= gyb &&
        mesh.vgy[v] <= gyt) {
      state.phase.crack_mask.insert(v);
    }
  }
  if (state.phase.crack_mask.empty()) {
    // Seed line off the vertex lattice: fall back to the cell corners.
    for (int c : cells) {
      for (int v : mesh.cells[c].v) state.phase.crack_mask.insert(v);
    }
  }
  for (int v : state.phase.crack_mask) state.phase.phi[v] = 0.0;

  // Starting guess for the stress function: one linear solve (beta = 0)
  // under the first load increment.
  {
    MaterialModel linear = cfg.material;
    linear.beta = 0.0;
    LinearSolver solver;
    auto bc = top_boundary_values(mesh, dofmap,
                                  cfg.loading.c * cfg.loading.dt,
                                  cfg.crack.x0, &state.phase.crack_mask);
    state.phi_airy = picard_solve_airy(mesh, dofmap, state.phi_airy,
                                       state.phase.phi, bc, linear,
                                       cfg.solver, solver,
                                       state.phase.crack_mask)
                         .phi_airy;
  }

  switch (cfg.length_scale.mode) {
    case XiMode::Fixed:
      state.xi = uniform_xi_field(mesh, cfg.length_scale.xi_iv);
      break;
    case XiMode::GlobalOptimal:
      state.xi = uniform_xi_field(
          mesh, xi_global_optimal(mesh, state.phase.phi, cfg.length_scale,
                                  cfg.material.Gc));
      break;
    case XiMode::Local:
      state.xi = compute_xi_field(mesh, state.phase.phi, cfg.length_scale,
                                  cfg.material.Gc);
      break;
  }

  // Dress the seeded crack: relax the phase field once at zero strain so
  // the mask carries its equilibrium profile before loading starts. The
  // regularized surface energy of this dressed state is the pre-crack's;
  // energies are reported relative to it.
  {
    LinearSolver solver;
    const Eigen::VectorXd no_strain = Eigen::VectorXd::Zero(nv);
    SparseSystem system = assemble_phase_system(
        mesh, dofmap, no_strain, state.phase.phi, state.xi, cfg.material,
        cfg.length_scale, state.phase.crack_mask);
    Eigen::VectorXd x = solver.solve(system, cfg.solver.linear_tol);
    dofmap.distribute_constraints(x);
    for (int v = 0; v < nv; ++v) {
      if (!dofmap.is_node(v)) x[v] = state.phase.phi[v];
    }
    state.phase = clamp_and_project(x, state.phase.phi, state.phase);
    if (cfg.length_scale.mode == XiMode::Local) {
      state.xi = compute_xi_field(mesh, state.phase.phi, cfg.length_scale,
                                  cfg.material.Gc);
    }
  }
  return state;
}

FieldState transfer_solution(const QuadMesh& old_mesh,
                             const QuadMesh& new_mesh,
                             const MeshCorrespondence& corr,
                             const FieldState& state) {
  const int n_old = int(old_mesh.vertices.size());
  const int n_new = int(new_mesh.vertices.size());
  FieldState out;
  out.phase.crack_threshold = state.phase.crack_threshold;
  out.phase.crack_mask = state.phase.crack_mask;
  out.phi_airy = Eigen::VectorXd::Zero(n_new);
  out.phase.phi = Eigen::VectorXd::Ones(n_new);
  out.phi_airy.head(n_old) = state.phi_airy;
  out.phase.phi.head(n_old) = state.phase.phi;

  for (const NewNode& nn : corr.new_nodes) {
    double airy = 0.0, phi = 0.0;
    bool all_masked = true;
    for (int k = 0; k < nn.n_parents; ++k) {
      const int p = nn.parents[k];
      airy += state.phi_airy[p];
      phi += state.phase.phi[p];
      all_masked = all_masked && state.phase.crack_mask.count(p) > 0;
    }
    out.phi_airy[nn.vertex] = airy / nn.n_parents;
    out.phase.phi[nn.vertex] = phi / nn.n_parents;
    if (all_masked) out.phase.crack_mask.insert(nn.vertex);
  }

  // Coarsening may not heal: parent corners take the worst (smallest)
  // phase value seen on the retired children.
  for (int p : corr.coarsened) {
    double m_phi = 1.0;
    for (int ch : old_mesh.cells[p].child) {
      for (int v : old_mesh.cells[ch].v) {
        m_phi = std::min(m_phi, state.phase.phi[v]);
      }
    }
    for (int v : new_mesh.cells[p].v) {
      out.phase.phi[v] = std::min(out.phase.phi[v], m_phi);
    }
  }

  for (int v = 0; v < n_new; ++v) {
    double val = std::clamp(out.phase.phi[v], 0.0, 1.0);
    if (val < out.phase.crack_threshold) {
      val = 0.0;
      out.phase.crack_mask.insert(v);
    }
    out.phase.phi[v] = val;
  }
  close_crack_pinches(new_mesh, out.phase.crack_mask);
  for (int v : out.phase.crack_mask) out.phase.phi[v] = 0.0;

  // xi by inheritance; refreshed by the caller in non-fixed modes.
  std::vector<double> old_xi(old_mesh.cells.size(), 0.0);
  const auto& old_active = old_mesh.active_cells();
  for (int k = 0; k < int(old_active.size()); ++k) {
    old_xi[old_active[k]] = state.xi.cell_xi[k];
  }
  out.xi.cell_xi.reserve(new_mesh.n_active());
  for (int c : new_mesh.active_cells()) {
    if (c < int(old_mesh.cells.size()) && old_xi[c] > 0.0) {
      out.xi.cell_xi.push_back(old_xi[c]);
    } else if (c < int(old_mesh.cells.size()) &&
               old_mesh.cells[c].child[0] >= 0) {
      double sum = 0.0;
      for (int ch : old_mesh.cells[c].child) sum += old_xi[ch];
      out.xi.cell_xi.push_back(sum / 4.0);
    } else {
      out.xi.cell_xi.push_back(old_xi[new_mesh.cells[c].parent]);
    }
  }
  return out;
}

bool is_fully_fractured(const QuadMesh& mesh, const std::set<int>& crack_mask) {
  if (crack_mask.empty()) return false;
  // The material is severed where crack cells (cells with a masked
  // corner) form an edge-connected chain from the top boundary to the
  // bottom; those cells carry no stress, so such a chain separates the
  // two halves. Node-path connectivity would miss diagonal jogs.
  const std::vector<char> dead = crack_cell_flags(mesh, crack_mask);
  std::deque<int> queue;
  std::set<int> seen;
  for (int c : mesh.active_cells()) {
    if (!dead[c]) continue;
    const Cell& cell = mesh.cells[c];
    if (cell.iy + 1 == (1u << cell.level)) {
      queue.push_back(c);
      seen.insert(c);
    }
  }
  while (!queue.empty()) {
    const int c = queue.front();
    queue.pop_front();
    if (mesh.cells[c].iy == 0) return true;
    for (int side = 0; side < 4; ++side) {
      const int n = mesh.neighbor_same_or_coarser(c, side);
      if (n >= 0) {
        if (dead[n] && seen.insert(n).second) queue.push_back(n);
        continue;
      }
      if (!mesh.neighbor_is_finer(c, side)) continue;
      // Collect the finer cells across this side by scanning actives.
      for (int f : mesh.active_cells()) {
        if (!dead[f] || seen.count(f)) continue;
        if (mesh.cells[f].level <= mesh.cells[c].level) continue;
        if (mesh.neighbor_same_or_coarser(f, side ^ 2) == c) {
          seen.insert(f);
          queue.push_back(f);
        }
      }
    }
  }
  return false;
}

int count_unknowns(const QuadMesh& mesh, const DofMap& dofmap) {
  int n = 0;
  for (int v = 0; v < int(mesh.vertices.size()); ++v) {
    if (dofmap.is_node(v) && !dofmap.is_hanging(v)) ++n;
  }
  return n;
}

RunReport run_simulation(const RunConfig& config, const StepCallback& on_step) {
  RunConfig cfg = config;
  cfg.finalize();

  QuadMesh mesh = QuadMesh::build_uniform(cfg.mesh.divisions_per_side,
                                          cfg.mesh.max_extra_levels);
  DofMap dofmap(mesh);
  auto solver = std::make_unique<LinearSolver>();
  FieldState state = initialize(mesh, cfg);

  RunReport report;
  const double h_min =
      cfg.base_h() / double(1 << cfg.mesh.max_extra_levels);
  int countdown = -1;
  // Pre-crack surface energy of the dressed seed; reported surface energy
  // is the increment over it, so the elastic phase logs zero.
  const double surface0 = surface_energy(mesh, state.phase.phi, state.xi,
                                         cfg.length_scale, cfg.material.Gc);

  for (int n = 1; n <= cfg.loading.max_steps; ++n) {
    const double t = n * cfg.loading.dt;
    if (t > cfg.loading.t_end * (1.0 + 1e-12)) break;
    const double load = cfg.loading.c * t;

    auto bc = top_boundary_values(mesh, dofmap, load, cfg.crack.x0,
                                  &state.phase.crack_mask);
    StaggerResult sr = staggered_step(mesh, dofmap, state, bc, cfg, *solver);
    state = std::move(sr.state);

    if (cfg.length_scale.mode == XiMode::GlobalOptimal) {
      state.xi = uniform_xi_field(
          mesh, xi_global_optimal(mesh, state.phase.phi, cfg.length_scale,
                                  cfg.material.Gc));
    } else if (cfg.length_scale.mode == XiMode::Local) {
      state.xi = compute_xi_field(mesh, state.phase.phi, cfg.length_scale,
                                  cfg.material.Gc);
    }

    const bool was_fractured = report.fractured;
    if (!report.fractured &&
        is_fully_fractured(mesh, state.phase.crack_mask)) {
      report.fractured = true;
      report.fracture_time = t;
      countdown = cfg.post_fracture_steps;
    }

    // AMR after the step converges; the next step solves on the new mesh.
    if (cfg.mesh.amr_enabled && cfg.mesh.max_extra_levels > 0) {
      auto [refine, coarsen] =
          mark_cells(mesh, state.xi, cfg.length_scale, h_min);
      if (!refine.empty() || !coarsen.empty()) {
        auto [new_mesh, corr] = refine_and_coarsen(mesh, refine, coarsen);
        state = transfer_solution(mesh, new_mesh, corr, state);
        mesh = std::move(new_mesh);
        dofmap = DofMap(mesh);
        solver = std::make_unique<LinearSolver>();
        dofmap.distribute_constraints(state.phi_airy);
        dofmap.distribute_constraints(state.phase.phi);
        for (int v : state.phase.crack_mask) state.phase.phi[v] = 0.0;
        if (cfg.length_scale.mode == XiMode::Local) {
          state.xi = compute_xi_field(mesh, state.phase.phi, cfg.length_scale,
                                      cfg.material.Gc);
        }
        if (cfg.reequilibrate_after_amr) {
          bc = top_boundary_values(mesh, dofmap, load, cfg.crack.x0,
                                   &state.phase.crack_mask);
          StaggerResult rr =
              staggered_step(mesh, dofmap, state, bc, cfg, *solver);
          state = std::move(rr.state);
          sr.iterations += rr.iterations;
        }
      }
    }

    EnergyRecord rec;
    rec.step = n;
    rec.time = t;
    rec.load = load;
    rec.bulk = bulk_energy(mesh, state.phi_airy, state.phase.phi,
                           cfg.material, &state.phase.crack_mask);
    rec.surface = surface_energy(mesh, state.phase.phi, state.xi,
                                 cfg.length_scale, cfg.material.Gc) -
                  surface0;
    rec.total = rec.bulk + rec.surface;
    rec.xi_min = state.xi.min();
    rec.xi_max = state.xi.max();
    rec.xi_mean = state.xi.mean();
    rec.cells = mesh.n_active();
    rec.dofs = count_unknowns(mesh, dofmap);
    rec.stagger_iters = sr.iterations;
    report.records.push_back(rec);
    report.dof_steps += rec.dofs;
    report.steps_completed = n;
    if (on_step) on_step(n, mesh, state, rec);

    if (report.fractured) {
      if (!was_fractured) {
        if (countdown == 0) break;
      } else if (--countdown <= 0) {
        break;
      }
    }
  }

  report.mesh = std::move(mesh);
  report.state = std::move(state);
  return report;
}

}  // namespace fracfield
