#ifndef POROFRAC_MESH_HPP
#define POROFRAC_MESH_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "porofrac/numerics.hpp"

namespace porofrac {

/// Raw mesh description as read from the text format:
///   NODES n            followed by n lines "x y"
///   TRIANGLES m        followed by m lines "v0 v1 v2 region"
///   FRACTURE_EDGES k   followed by k lines "v0 v1 fracture_id"
///   BOUNDARY b         followed by b lines "v0 v1 tag"
/// Indices are 0-based; parsing is whitespace tolerant.
struct MeshInput {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> tri_region;
  std::vector<std::array<int, 3>> fracture_edges;  // v0, v1, fracture id
  std::vector<std::array<int, 3>> boundary_edges;  // v0, v1, tag
};

MeshInput read_mesh_text(std::istream& in);
MeshInput read_mesh_file(const std::string& path);
void write_mesh_text(const MeshInput& input, std::ostream& out);

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One fracture face: a mesh edge carrying flow and contact unknowns.
/// The face is oriented along the fracture polyline; n_plus points from the
/// "+" side toward the "−" side.
struct FractureFace {
  int edge = -1;
  int frac = -1;
  int v0 = -1, v1 = -1;  // ordered along the polyline walk
  int tri_plus = -1, tri_minus = -1;
  Vec2 tangent;
  Vec2 n_plus;
  double length = 0.0;
  Vec2 midpoint;
  double arclength_mid = 0.0;  // from the polyline start
  int index_in_fracture = -1;
};

struct MeshEdge {
  int v0 = -1, v1 = -1;  // v0 < v1
  int tri[2] = {-1, -1};
  int n_tris = 0;
  int fracture_face = -1;  // index into fracture_faces, -1 if none
  int boundary_tag = -1;   // >= 0 on the domain boundary
};

struct FracturedMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> tris;
  std::vector<int> tri_region;
  std::vector<MeshEdge> edges;
  std::vector<std::array<int, 3>> tri_edges;  // local edge i joins corners (i, i+1 mod 3)
  std::vector<FractureFace> fracture_faces;
  int n_fractures = 0;
  std::vector<std::vector<int>> fracture_faces_of;  // ordered per fracture

  // TPFA cell geometry.
  std::vector<double> tri_area;
  std::vector<Vec2> cell_centers;
  std::vector<char> center_is_barycenter;  // circumcenter fell outside

  // P2 displacement node layout with side duplication along fractures.
  int n_disp_nodes = 0;
  std::vector<int> vertex_copy_offset;               // size nv+1
  std::vector<std::array<int, 3>> tri_corner_node;   // per (tri, corner)
  std::vector<std::array<int, 3>> tri_midside_node;  // per (tri, local edge)
  std::vector<Vec2> node_pos;
  std::vector<int> node_parent_vertex;  // -1 for midside nodes
  std::vector<int> node_parent_edge;    // -1 for vertex nodes

  std::vector<int> vertex_frac_degree;  // incident fracture edges
  std::vector<char> vertex_is_tip;      // exactly one incident fracture edge
  std::vector<char> vertex_on_boundary;

  int vertex_copies(int v) const { return vertex_copy_offset[v + 1] - vertex_copy_offset[v]; }
  int n_cells() const { return (int)tris.size(); }
  int n_fracture_faces() const { return (int)fracture_faces.size(); }
  /// P2 trace nodes of face f seen from side s (+1 or -1): (v0 node, v1 node, midside node).
  std::array<int, 3> face_trace_nodes(int f, int side) const;
  /// Total fracture length of one fracture.
  double fracture_length(int frac) const;
};

FracturedMesh build_mesh(const MeshInput& input);

struct OrthogonalityReport {
  double max_deviation_deg = 0.0;
  int worst_edge = -1;
  int n_barycenter_cells = 0;
  bool ok(double tol_deg) const { return max_deviation_deg <= tol_deg; }
};

/// Angle between each interior cell-center segment and the face normal.
OrthogonalityReport check_orthogonality(const FracturedMesh& mesh, double tol_deg = 1e-6);

struct TpfaConnectivity {
  struct CellCell {
    int k, l;
    double t;  // |σ| / (d_k/K_k + d_l/K_l)
    int edge;
  };
  struct CellBnd {
    int cell;
    int edge;
    double t;  // half transmissibility to the face midpoint
    int tag;
    Vec2 midpoint;
    double length;
  };
  struct MatFrac {
    int face;
    int cell[2];    // +, − side cells
    double t_half[2];
    double lambda_f;  // normal fracture transmissibility (m)
    double area;      // |σ|
  };
  struct FaceFace {
    int f0, f1;
    double t;  // star-delta pair transmissibility, conductivity d_f^3/12
    int vertex;
  };
  struct FaceBnd {
    int face;
    int vertex;
    double t;
    int tag;
  };
  std::vector<CellCell> cell_cell;
  std::vector<CellBnd> cell_bnd;
  std::vector<MatFrac> mat_frac;
  std::vector<FaceFace> face_face;
  std::vector<FaceBnd> face_bnd;
};

/// Builds TPFA transmissibilities from per-cell permeability (m^2) and
/// per-face aperture (m). Throws MeshError naming the face when the
/// center segment deviates from the face normal by more than tol_deg.
TpfaConnectivity tpfa_coefficients(const FracturedMesh& mesh,
                                   const std::vector<double>& cell_perm,
                                   const std::vector<double>& face_aperture,
                                   const std::vector<double>& face_lambda,
                                   double tol_deg = 1e-6);

// --- structured generators (test squares and benchmark domains) ---

/// Rectangle triangulated by splitting an nx-by-ny grid of quads with
/// alternating diagonals. Boundary tags: 0 bottom, 1 right, 2 top, 3 left.
MeshInput make_rect_mesh(double w, double h, int nx, int ny);

/// Rectangle cut into 4 triangles per grid square (both diagonals).
MeshInput make_crisscross_mesh(double w, double h, int nx, int ny);

/// Offset-row ("brick") pattern with isoceles triangles; every triangle is
/// acute for 0.5 < b/a, so circumcenters give an orthogonal TPFA mesh. The
/// left/right boundaries zigzag by a/2 when pinch is false. Rows are spaced
/// dy = h/ny; odd rows are offset by dx/2.
MeshInput make_brick_mesh(double w, double h, int nx, int ny);

/// Tensor-product mesh from explicit breakpoints with alternating diagonals,
/// mirror symmetric about both axes when the breakpoints are.
MeshInput make_tensor_mesh(const std::vector<double>& xs, const std::vector<double>& ys);

/// Marks as fracture edges all mesh edges lying on segment a--b; returns the
/// number of edges appended. Endpoints must coincide with mesh vertices.
int add_fracture_segment(MeshInput& input, const Vec2& a, const Vec2& b, int frac_id,
                         double tol = 1e-9);

}  // namespace porofrac

#endif
