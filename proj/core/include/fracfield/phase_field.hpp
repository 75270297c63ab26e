#pragma once

#include <Eigen/Dense>
#include <set>

#include "fracfield/constitutive.hpp"
#include "fracfield/fem.hpp"
#include "fracfield/length_scale.hpp"
#include "fracfield/mesh.hpp"

namespace fracfield {

/// Nodal phase field (1 intact, 0 fully cracked) plus the frozen crack
/// set. The crack mask only ever grows, and masked nodes stay at zero.
struct PhaseState {
  Eigen::VectorXd phi;
  std::set<int> crack_mask;
  double crack_threshold = 0.1;
};

/// Per-cell flag (indexed by cell id): true when any corner of an active
/// cell belongs to the crack mask. Those cells are the discrete crack:
/// the stress-function problem skips them, so the crack faces are
/// traction-free and the field may jump across the slit, and the phase
/// equation carries no elastic driving energy on them.
std::vector<char> crack_cell_flags(const QuadMesh& mesh,
                                   const std::set<int>& crack_mask);

/// Linear system for the phase field with the current stress function and
/// previous phase iterate frozen in the coefficients:
///   int [ mu (1-kappa) W(grad Phi, phi_prev) phi psi
///         + (2 Gc / c_v) xi grad phi . grad psi ] dx
///     = int (Gc / c_v) psi / xi dx,
/// crack-mask nodes pinned to zero, natural conditions elsewhere.
SparseSystem assemble_phase_system(const QuadMesh& mesh, const DofMap& dofmap,
                                   const Eigen::VectorXd& phi_airy,
                                   const Eigen::VectorXd& phi_prev,
                                   const XiField& xi_field,
                                   const MaterialModel& m,
                                   const LengthScaleConfig& lsc,
                                   const std::set<int>& crack_mask);

/// Closes diagonal pinches in the crack-cell set. When two crack cells
/// meet only at a shared corner, that node still couples the material on
/// either side of the slit and ends up carrying the whole grip jump.
/// Masking the node retires all cells around it, so an 8-connected crack
/// path really separates the domain. Runs to a fixed point; returns the
/// number of nodes added to the mask.
int close_crack_pinches(const QuadMesh& mesh, std::set<int>& crack_mask);

/// Nodes allowed to join the crack mask: non-hanging nodes all of whose
/// incident active cells sit at target_level. Keeping the mask inside
/// fully refined regions matters on adaptive meshes: a crack tearing
/// through a coarse patch leaves a dead strip two coarse cells wide, and
/// a coarse cell whose only masked node is a hanging midpoint stays in
/// the stress problem and bridges the slit. A stalled tip waits for
/// refinement instead (see run_simulation's AMR passes). Hanging nodes
/// follow their masters into the mask via the all-parents rule.
std::vector<char> maskable_nodes(const QuadMesh& mesh, const DofMap& dofmap,
                                 int target_level);

/// Projection step: clamp to [0,1], enforce irreversibility against the
/// previous time step, then pin every node falling below the crack
/// threshold to zero permanently. When `maskable` is given, nodes not
/// flagged in it are clamped but never pinned or masked.
PhaseState clamp_and_project(const Eigen::VectorXd& phi_new,
                             const Eigen::VectorXd& phi_old_step,
                             const PhaseState& state,
                             const std::vector<char>* maskable = nullptr);

/// Degraded nonlinear strain energy
///   (mu/2) int ((1-kappa) phi^2 + kappa) W(grad Phi, phi) dx,
/// integrated over the intact region (crack cells are excluded when a
/// mask is given; the stress function is undefined on them).
double bulk_energy(const QuadMesh& mesh, const Eigen::VectorXd& phi_airy,
                   const Eigen::VectorXd& phi, const MaterialModel& m,
                   const std::set<int>* crack_mask = nullptr);

/// Regularized crack-surface energy
///   (Gc/c_v) int [ (1 - phi + eta*[include_eta]) / xi + xi |grad phi|^2 ].
double surface_energy(const QuadMesh& mesh, const Eigen::VectorXd& phi,
                      const XiField& xi_field, const LengthScaleConfig& lsc,
                      double Gc, bool include_eta = false);

}  // namespace fracfield
