#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fracfield/config.hpp"
#include "fracfield/energy_log.hpp"
#include "fracfield/fem.hpp"
#include "fracfield/length_scale.hpp"
#include "fracfield/mesh.hpp"
#include "fracfield/phase_field.hpp"

namespace fracfield {

struct StaggerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fields of one converged load step on one mesh.
struct FieldState {
  Eigen::VectorXd phi_airy;
  PhaseState phase;
  XiField xi;
};

/// Dirichlet data on the top edge: the stress function ramps to -load
/// left of the crack mouth and +load right of it. The mouth node itself
/// is excluded (it belongs to the crack mask), as are hanging nodes,
/// whose values follow from their masters. Nodes that later join the
/// crack mask are excluded too: fully broken material cannot be gripped,
/// and keeping the load on a dead node re-concentrates the displacement
/// jump on its intact neighbour, which widens the crack mouth along the
/// edge one node per step.
std::vector<std::pair<int, double>> top_boundary_values(
    const QuadMesh& mesh, const DofMap& dofmap, double load, double x0,
    const std::set<int>* crack_mask = nullptr);

struct PicardResult {
  Eigen::VectorXd phi_airy;
  int iterations = 0;
};

/// Frozen-coefficient iteration for the nonlinear stress-function
/// equation. The diffusion coefficient is re-evaluated from the previous
/// iterate until successive iterates agree to tol_picard (one solve
/// suffices when beta = 0, where the equation is linear). Cells flagged
/// by crack_cell_flags are excluded from the problem: the crack is a
/// traction-free slit and the field jumps across it.
PicardResult picard_solve_airy(const QuadMesh& mesh, const DofMap& dofmap,
                               const Eigen::VectorXd& phi_airy_init,
                               const Eigen::VectorXd& phi,
                               const std::vector<std::pair<int, double>>& bc,
                               const MaterialModel& m, const SolverConfig& sc,
                               LinearSolver& solver,
                               const std::set<int>& crack_mask = {});

struct StaggerResult {
  FieldState state;
  int iterations = 0;    // staggered sweeps
  int picard_total = 0;  // inner solves across all sweeps
};

/// Alternate minimization at a fixed load: stress-function solve, then
/// phase-field solve with projection, until both fields are stationary
/// to tol_stagger. In local mode the xi field follows the phase field
/// through the sweeps.
StaggerResult staggered_step(const QuadMesh& mesh, const DofMap& dofmap,
                             const FieldState& prev,
                             const std::vector<std::pair<int, double>>& bc,
                             const RunConfig& cfg, LinearSolver& solver);

/// Initial state: phi = 1 away from the seeded crack segment, crack-mask
/// nodes pinned to zero, stress function from one linear (beta = 0) solve
/// at the first load increment, xi per the configured mode.
FieldState initialize(const QuadMesh& mesh, const RunConfig& cfg);

/// Interpolates fields onto the output of refine_and_coarsen. New nodes
/// take the mean of their parent values; corners of a reactivated parent
/// take the minimum phase value over the former child nodes so
/// irreversibility survives coarsening. A new node joins the crack mask
/// exactly when all its parents are masked. Cell xi values are inherited
/// (children copy the parent, a reactivated parent averages its former
/// children); callers refresh xi afterwards in non-fixed modes.
FieldState transfer_solution(const QuadMesh& old_mesh, const QuadMesh& new_mesh,
                             const MeshCorrespondence& corr,
                             const FieldState& state);

/// True once crack-mask nodes connect the top edge to the bottom edge
/// through edges of active cells.
bool is_fully_fractured(const QuadMesh& mesh, const std::set<int>& crack_mask);

/// Unconstrained unknowns: mesh nodes that are not hanging.
int count_unknowns(const QuadMesh& mesh, const DofMap& dofmap);

struct RunReport {
  std::vector<EnergyRecord> records;
  QuadMesh mesh;     // final mesh
  FieldState state;  // final fields
  int steps_completed = 0;
  bool fractured = false;
  double fracture_time = -1.0;
  long long dof_steps = 0;  // sum of unknown counts over accepted steps
};

/// Called after every accepted load step (post-AMR mesh and fields).
using StepCallback = std::function<void(int step, const QuadMesh& mesh,
                                        const FieldState& state,
                                        const EnergyRecord& record)>;

/// Quasi-static loading loop: ramp the boundary data, alternate-minimize
/// each step, track the crack mask, adapt the mesh in local mode, and
/// stop post_fracture_steps after the crack spans the domain.
RunReport run_simulation(const RunConfig& cfg,
                         const StepCallback& on_step = {});

}  // namespace fracfield
