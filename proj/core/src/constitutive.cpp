#include "fracfield/constitutive.hpp"

#include <cmath>
#include <stdexcept>

namespace fracfield {

void MaterialModel::validate() const {
  if (!(mu > 0)) throw std::invalid_argument("material.mu > 0 required");
  if (!(Gc > 0)) throw std::invalid_argument("material.Gc > 0 required");
  if (!(beta >= 0)) throw std::invalid_argument("material.beta >= 0 required");
  if (!(alpha > 0)) throw std::invalid_argument("material.alpha > 0 required");
  if (!(kappa > 0 && kappa < 1)) {
    throw std::invalid_argument("material.kappa in (0,1) required");
  }
}

namespace {

// (1 + b^a s^a)^{1/a} with the b=0 and s=0 branches special-cased so no
// 0^0 is ever formed. s is the squared gradient magnitude.
double bracket(double b, double alpha, double s) {
  if (b == 0.0 || s == 0.0) return 1.0;
  if (alpha == 1.0) return 1.0 + b * s;
  return std::pow(1.0 + std::pow(b * s, alpha), 1.0 / alpha);
}

}  // namespace

double psi1(double r, const MaterialModel& m) {
  return 1.0 / (2.0 * m.mu * bracket(m.beta, m.alpha, r * r));
}

double degradation(double phi, double kappa) {
  return (1.0 - kappa) * phi * phi + kappa;
}

double strain_energy_density(const Vec2& grad_airy, double phi,
                             const MaterialModel& m) {
  const double s = grad_airy.x * grad_airy.x + grad_airy.y * grad_airy.y;
  const double g = degradation(phi, m.kappa);
  return s / bracket(m.beta * g, m.alpha, s);
}

double picard_diffusion_coeff(const Vec2& grad_airy_prev, double phi,
                              const MaterialModel& m) {
  const double s = grad_airy_prev.x * grad_airy_prev.x +
                   grad_airy_prev.y * grad_airy_prev.y;
  const double g = degradation(phi, m.kappa);
  return g / bracket(m.beta * g, m.alpha, s);
}

double phase_reaction_coeff(const Vec2& grad_airy, double phi_prev,
                            const MaterialModel& m) {
  return m.mu * (1.0 - m.kappa) * strain_energy_density(grad_airy, phi_prev, m);
}

}  // namespace fracfield
