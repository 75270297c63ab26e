#include "fracfield/vtk_io.hpp"

#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <vector>

namespace fracfield {

void write_vtk(const std::string& path, const QuadMesh& mesh,
               const Eigen::VectorXd& phi_airy, const Eigen::VectorXd& phase,
               const std::set<int>& crack_mask, const XiField& xi) {
  // Compact point numbering over the vertices of active cells.
  std::vector<int> point_id(mesh.vertices.size(), -1);
  std::vector<int> points;
  for (int c : mesh.active_cells()) {
    for (int v : mesh.cells[c].v) {
      if (point_id[v] < 0) {
        point_id[v] = int(points.size());
        points.push_back(v);
      }
    }
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << std::setprecision(15);
  out << "# vtk DataFile Version 3.0\n";
  out << "fracfield fields\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << points.size() << " double\n";
  for (int v : points) {
    out << mesh.vertices[v].x << ' ' << mesh.vertices[v].y << " 0\n";
  }
  const int nc = mesh.n_active();
  out << "CELLS " << nc << ' ' << nc * 5 << "\n";
  for (int c : mesh.active_cells()) {
    const auto& v = mesh.cells[c].v;
    out << "4 " << point_id[v[0]] << ' ' << point_id[v[1]] << ' '
        << point_id[v[2]] << ' ' << point_id[v[3]] << "\n";
  }
  out << "CELL_TYPES " << nc << "\n";
  for (int i = 0; i < nc; ++i) out << "9\n";

  out << "POINT_DATA " << points.size() << "\n";
  out << "SCALARS airy double 1\nLOOKUP_TABLE default\n";
  for (int v : points) out << phi_airy[v] << "\n";
  out << "SCALARS phase double 1\nLOOKUP_TABLE default\n";
  for (int v : points) out << phase[v] << "\n";
  out << "SCALARS crack int 1\nLOOKUP_TABLE default\n";
  for (int v : points) out << (crack_mask.count(v) ? 1 : 0) << "\n";

  out << "CELL_DATA " << nc << "\n";
  out << "SCALARS xi double 1\nLOOKUP_TABLE default\n";
  for (int k = 0; k < nc; ++k) out << xi.cell_xi[k] << "\n";
  out << "SCALARS level int 1\nLOOKUP_TABLE default\n";
  for (int c : mesh.active_cells()) out << mesh.cells[c].level << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace fracfield
