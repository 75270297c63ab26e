#pragma once

#include "fracfield/mesh.hpp"

namespace fracfield {

/// Material data for the strain-limiting anti-plane shear model.
struct MaterialModel {
  double mu = 80.8;      // shear modulus
  double Gc = 2.7;       // critical energy release rate
  double beta = 1e-3;    // strain-limiting parameter, >= 0
  double alpha = 1.0;    // strain-limiting exponent, > 0
  double kappa = 1e-10;  // residual stiffness, 0 < kappa << 1

  void validate() const;
};

/// Compliance function 1 / (2 mu (1 + beta^a r^{2a})^{1/a}).
/// Strictly decreasing in the stress magnitude r for beta > 0; collapses
/// to 1/(2 mu) in the linear-elastic limit beta = 0.
double psi1(double r, const MaterialModel& m);

/// Degradation factor g(phi) = (1 - kappa) phi^2 + kappa.
double degradation(double phi, double kappa);

/// Strain energy density
///   W = |grad|^2 / (1 + beta^a g(phi)^a |grad|^{2a})^{1/a}.
double strain_energy_density(const Vec2& grad_airy, double phi,
                             const MaterialModel& m);

/// Frozen-coefficient diffusion coefficient for one Picard step of the
/// stress-function equation:
///   a = g(phi) / (1 + beta^a g(phi)^a |grad_prev|^{2a})^{1/a},  a in (0,1].
double picard_diffusion_coeff(const Vec2& grad_airy_prev, double phi,
                              const MaterialModel& m);

/// Reaction coefficient of the phase-field equation,
///   mu (1 - kappa) W(grad_airy, phi_prev);
/// the assembled reaction term is this coefficient times phi.
double phase_reaction_coeff(const Vec2& grad_airy, double phi_prev,
                            const MaterialModel& m);

}  // namespace fracfield
