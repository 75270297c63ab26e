#include "fracfield/length_scale.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fracfield {

XiMode parse_xi_mode(const std::string& name) {
  if (name == "fixed") return XiMode::Fixed;
  if (name == "global_optimal") return XiMode::GlobalOptimal;
  if (name == "local") return XiMode::Local;
  throw std::invalid_argument("unknown xi mode: " + name);
}

std::string to_string(XiMode mode) {
  switch (mode) {
    case XiMode::Fixed: return "fixed";
    case XiMode::GlobalOptimal: return "global_optimal";
    case XiMode::Local: return "local";
  }
  return "?";
}

void LengthScaleConfig::validate() const {
  if (!(eta > 0)) throw std::invalid_argument("length_scale.eta > 0 required");
  if (!(delta > 0)) {
    throw std::invalid_argument("length_scale.delta > 0 required");
  }
  if (!(xi_iv > 0)) {
    throw std::invalid_argument("length_scale.xi_iv > 0 required");
  }
  if (!(xi_refine < xi_coarsen)) {
    throw std::invalid_argument(
        "length_scale.xi_refine < length_scale.xi_coarsen required");
  }
  if (!(c_v > 0)) throw std::invalid_argument("length_scale.c_v > 0 required");
}

double XiField::min() const {
  return *std::min_element(cell_xi.begin(), cell_xi.end());
}
double XiField::max() const {
  return *std::max_element(cell_xi.begin(), cell_xi.end());
}
double XiField::mean() const {
  return std::accumulate(cell_xi.begin(), cell_xi.end(), 0.0) /
         double(cell_xi.size());
}

double calibrate_delta(double h, double Gc, double c_v) {
  return 3.0 * Gc / (96.0 * c_v * h * h);
}

double calibrate_eta(double h, double Gc, double c_v, double delta) {
  return 100.0 * h * h * c_v * delta / Gc;
}

double xi_global_optimal(const QuadMesh& mesh, const Eigen::VectorXd& phi,
                         const LengthScaleConfig& lsc, double Gc) {
  const auto& rule = QuadratureRule::gauss2x2();
  const double gc_cv = Gc / lsc.c_v;
  double numerator = 0.0;
  double grad_term = 0.0;
  double delta_term = 0.0;
  for (int c : mesh.active_cells()) {
    const double area = mesh.cell_area(c);
    CellField f = evaluate_on_cell(mesh, c, phi, rule);
    for (int q = 0; q < 4; ++q) {
      const double w = rule.weights[q] * area;
      numerator += w * (1.0 - f.value[q] + lsc.eta);
      grad_term += w * (f.gradient[q].x * f.gradient[q].x +
                        f.gradient[q].y * f.gradient[q].y);
    }
    delta_term += lsc.delta * area;
  }
  return std::sqrt(gc_cv * numerator / (gc_cv * grad_term + delta_term));
}

double xi_local(double phi_value, const Vec2& grad_phi,
                const LengthScaleConfig& lsc, double Gc) {
  const double gc_cv = Gc / lsc.c_v;
  const double num = gc_cv * (1.0 - phi_value + lsc.eta);
  const double den =
      gc_cv * (grad_phi.x * grad_phi.x + grad_phi.y * grad_phi.y) + lsc.delta;
  return std::sqrt(num / den);
}

XiField compute_xi_field(const QuadMesh& mesh, const Eigen::VectorXd& phi,
                         const LengthScaleConfig& lsc, double Gc) {
  const auto& rule = QuadratureRule::gauss2x2();
  XiField field;
  field.cell_xi.reserve(mesh.n_active());
  LengthScaleConfig local = lsc;
  for (int c : mesh.active_cells()) {
    if (lsc.delta_per_cell) {
      local.delta = calibrate_delta(mesh.cell_size(c), Gc, lsc.c_v);
    }
    CellField f = evaluate_on_cell(mesh, c, phi, rule);
    double xi = 0.0;
    for (int q = 0; q < 4; ++q) {
      xi += 0.25 * xi_local(f.value[q], f.gradient[q], local, Gc);
    }
    field.cell_xi.push_back(std::max(xi, lsc.xi_floor));
  }
  return field;
}

XiField uniform_xi_field(const QuadMesh& mesh, double xi) {
  XiField field;
  field.cell_xi.assign(mesh.n_active(), xi);
  return field;
}

std::pair<std::set<int>, std::set<int>> mark_cells(const QuadMesh& mesh,
                                                   const XiField& xi,
                                                   const LengthScaleConfig& lsc,
                                                   double h_min) {
  std::set<int> refine, coarsen;
  const auto& active = mesh.active_cells();
  for (int k = 0; k < int(active.size()); ++k) {
    const int c = active[k];
    const double xi_e = xi.cell_xi[k];
    const double h = mesh.cell_size(c);
    if (xi_e < lsc.xi_refine && h > h_min) {
      refine.insert(c);
    } else if (xi_e > lsc.xi_coarsen && mesh.cells[c].level > mesh.min_level) {
      coarsen.insert(c);
    }
  }
  return {std::move(refine), std::move(coarsen)};
}

}  // namespace fracfield
