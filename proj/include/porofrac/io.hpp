#ifndef POROFRAC_IO_HPP
#define POROFRAC_IO_HPP

#include <string>

#include "porofrac/flow.hpp"
#include "porofrac/mesh.hpp"

namespace porofrac {

/// Legacy ASCII VTK unstructured grid with cell fields p_nw, p_w, s_nw, phi
/// and p_E; fracture quantities go to the companion CSV.
void write_vtk_snapshot(const FracturedMesh& mesh, const FlowState& state, const Vector& p_e_cell,
                        const std::string& path, const RockLaws* laws = nullptr);

/// Fracture-face CSV: fracture id, arclength, p_nw, p_w, s_nw, aperture.
void write_fracture_flow_csv(const FracturedMesh& mesh, const FlowState& state,
                             const RockLaws& laws, const std::string& path);

}  // namespace porofrac

#endif
