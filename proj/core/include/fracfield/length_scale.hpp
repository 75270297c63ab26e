#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>

#include "fracfield/fem.hpp"
#include "fracfield/mesh.hpp"

namespace fracfield {

enum class XiMode { Fixed, GlobalOptimal, Local };

XiMode parse_xi_mode(const std::string& name);
std::string to_string(XiMode mode);

/// Everything controlling the regularization length xi: the penalty
/// parameters, the evaluation mode, and the AMR thresholds.
struct LengthScaleConfig {
  double c_v = 8.0 / 3.0;  // AT1 normalization constant
  double eta = 3.125;      // lower-bound penalty
  double delta = 129.6;    // upper-bound penalty (energy density / length)
  XiMode mode = XiMode::Local;
  double xi_iv = 0.15625;     // initial / fixed value
  double xi_refine = 0.0125;  // AMR refine threshold
  double xi_coarsen = 0.1;    // AMR coarsen threshold
  double xi_floor = 0.011;    // minimum admissible xi
  // In local mode, calibrate delta per cell from the cell's own size
  // instead of using the constant above. This is what keeps xi ~ 10h
  // across refinement levels.
  bool delta_per_cell = true;

  void validate() const;
};

/// Per-active-cell xi values, indexed like mesh.active_cells().
struct XiField {
  std::vector<double> cell_xi;  // one entry per active cell
  double min() const;
  double max() const;
  double mean() const;
};

/// delta = 3 Gc / (96 c_v h^2).
double calibrate_delta(double h, double Gc, double c_v);

/// eta = 100 h^2 c_v delta / Gc. With the paired delta this is the
/// h-independent constant 100 * 3 / 96 = 3.125.
double calibrate_eta(double h, double Gc, double c_v, double delta);

/// Optimal global constant,
///   xi = sqrt( (Gc/c_v) int(1-phi+eta) /
///              ((Gc/c_v) int |grad phi|^2 + int delta) ).
double xi_global_optimal(const QuadMesh& mesh, const Eigen::VectorXd& phi,
                         const LengthScaleConfig& lsc, double Gc);

/// Pointwise closed form of the same stationarity condition.
double xi_local(double phi_value, const Vec2& grad_phi,
                const LengthScaleConfig& lsc, double Gc);

/// Cell-mean xi over the quadrature points, clipped below at xi_floor.
/// With delta_per_cell, delta is recalibrated from each cell's size.
XiField compute_xi_field(const QuadMesh& mesh, const Eigen::VectorXd& phi,
                         const LengthScaleConfig& lsc, double Gc);

/// Fills the field with one constant value.
XiField uniform_xi_field(const QuadMesh& mesh, double xi);

/// Algorithm's AMR marking: refine where xi_e < xi_refine and h > h_min;
/// coarsen where xi_e > xi_coarsen and level > min_level.
std::pair<std::set<int>, std::set<int>> mark_cells(const QuadMesh& mesh,
                                                   const XiField& xi,
                                                   const LengthScaleConfig& lsc,
                                                   double h_min);

}  // namespace fracfield
