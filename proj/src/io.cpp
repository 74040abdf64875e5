#include "porofrac/io.hpp"

#include <fstream>

namespace porofrac {

void write_vtk_snapshot(const FracturedMesh& mesh, const FlowState& state, const Vector& p_e_cell,
                        const std::string& path, const RockLaws* laws) {
  std::ofstream out(path);
  out.precision(12);
  out << "# vtk DataFile Version 3.0\nporofrac snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertices.size() << " double\n";
  for (const Vec2& v : mesh.vertices) out << v.x() << " " << v.y() << " 0\n";
  out << "CELLS " << mesh.n_cells() << " " << 4 * mesh.n_cells() << "\n";
  for (const auto& t : mesh.tris) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << mesh.n_cells() << "\n";
  for (int t = 0; t < mesh.n_cells(); ++t) out << "5\n";
  out << "CELL_DATA " << mesh.n_cells() << "\n";
  auto field = [&](const std::string& name, auto&& get) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < mesh.n_cells(); ++c) out << get(c) << "\n";
  };
  field("p_nw", [&](int c) { return state.p_cell[kNw][c]; });
  field("p_w", [&](int c) { return state.p_cell[kW][c]; });
  field("phi", [&](int c) { return state.phi[c]; });
  if (laws)
    field("s_nw", [&](int c) { return laws->s_nw(state.capillary_cell(c), Rock::Matrix); });
  if (p_e_cell.size() == mesh.n_cells())
    field("p_E", [&](int c) { return p_e_cell[c]; });
}

void write_fracture_flow_csv(const FracturedMesh& mesh, const FlowState& state,
                             const RockLaws& laws, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "fracture,arclength,p_nw,p_w,s_nw,aperture\n";
  for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
    const FractureFace& face = mesh.fracture_faces[f];
    double pc = state.p_face[kNw][f] - state.p_face[kW][f];
    out << face.frac << "," << face.arclength_mid << "," << state.p_face[kNw][f] << ","
        << state.p_face[kW][f] << "," << laws.s_nw(pc, Rock::Fracture) << ","
        << state.aperture[f] << "\n";
  }
}

}  // namespace porofrac
