#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>

#include "fracfield/length_scale.hpp"
#include "fracfield/mesh.hpp"

namespace fracfield {

/// Writes a VTK legacy ASCII unstructured grid (quad cells, type 9) with
/// point scalars "airy", "phase", "crack" and cell scalars "xi", "level".
void write_vtk(const std::string& path, const QuadMesh& mesh,
               const Eigen::VectorXd& phi_airy, const Eigen::VectorXd& phase,
               const std::set<int>& crack_mask, const XiField& xi);

}  // namespace fracfield
