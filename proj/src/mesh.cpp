#include "porofrac/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace porofrac {

namespace {
double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double tri_signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross2(b - a, c - a);
}

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
  Vec2 ab = b - a, ac = c - a;
  double d = 2.0 * cross2(ab, ac);
  double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
  Vec2 rel((ac.y() * ab2 - ab.y() * ac2) / d, (ab.x() * ac2 - ac.x() * ab2) / d);
  return a + rel;
}

double point_segment_distance_line(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 t = (b - a).normalized();
  Vec2 n(-t.y(), t.x());
  return std::abs((p - a).dot(n));
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};
}  // namespace

// ---------------------------------------------------------------------------
// Text format

MeshInput read_mesh_text(std::istream& in) {
  MeshInput input;
  std::string tok;
  while (in >> tok) {
    if (tok == "NODES") {
      int n;
      in >> n;
      input.vertices.resize(n);
      for (int i = 0; i < n; ++i) in >> input.vertices[i].x() >> input.vertices[i].y();
    } else if (tok == "TRIANGLES") {
      int m;
      in >> m;
      input.triangles.resize(m);
      input.tri_region.resize(m);
      for (int i = 0; i < m; ++i)
        in >> input.triangles[i][0] >> input.triangles[i][1] >> input.triangles[i][2] >>
            input.tri_region[i];
    } else if (tok == "FRACTURE_EDGES") {
      int k;
      in >> k;
      input.fracture_edges.resize(k);
      for (int i = 0; i < k; ++i)
        in >> input.fracture_edges[i][0] >> input.fracture_edges[i][1] >>
            input.fracture_edges[i][2];
    } else if (tok == "BOUNDARY") {
      int b;
      in >> b;
      input.boundary_edges.resize(b);
      for (int i = 0; i < b; ++i)
        in >> input.boundary_edges[i][0] >> input.boundary_edges[i][1] >>
            input.boundary_edges[i][2];
    } else {
      throw MeshError("mesh file: unknown section '" + tok + "'");
    }
    if (!in && !in.eof()) throw MeshError("mesh file: truncated section");
  }
  if (input.vertices.empty() || input.triangles.empty())
    throw MeshError("mesh file: missing NODES or TRIANGLES");
  return input;
}

MeshInput read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path);
  return read_mesh_text(in);
}

void write_mesh_text(const MeshInput& input, std::ostream& out) {
  out.precision(17);
  out << "NODES " << input.vertices.size() << "\n";
  for (const Vec2& v : input.vertices) out << v.x() << " " << v.y() << "\n";
  out << "TRIANGLES " << input.triangles.size() << "\n";
  for (std::size_t i = 0; i < input.triangles.size(); ++i)
    out << input.triangles[i][0] << " " << input.triangles[i][1] << " " << input.triangles[i][2]
        << " " << (i < input.tri_region.size() ? input.tri_region[i] : 0) << "\n";
  out << "FRACTURE_EDGES " << input.fracture_edges.size() << "\n";
  for (const auto& e : input.fracture_edges) out << e[0] << " " << e[1] << " " << e[2] << "\n";
  out << "BOUNDARY " << input.boundary_edges.size() << "\n";
  for (const auto& e : input.boundary_edges) out << e[0] << " " << e[1] << " " << e[2] << "\n";
}

// ---------------------------------------------------------------------------
// build_mesh

FracturedMesh build_mesh(const MeshInput& input) {
  FracturedMesh m;
  m.vertices = input.vertices;
  m.tris = input.triangles;
  m.tri_region = input.tri_region.empty() ? std::vector<int>(m.tris.size(), 0) : input.tri_region;
  const int nv = (int)m.vertices.size();
  const int nt = (int)m.tris.size();

  m.tri_area.resize(nt);
  for (int t = 0; t < nt; ++t) {
    auto& tri = m.tris[t];
    for (int k = 0; k < 3; ++k)
      if (tri[k] < 0 || tri[k] >= nv) throw MeshError("triangle vertex out of range");
    double a = tri_signed_area(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
    if (a < 0) {
      std::swap(tri[1], tri[2]);
      a = -a;
    }
    if (a <= 0) throw MeshError("degenerate triangle " + std::to_string(t));
    m.tri_area[t] = a;
  }

  // Unique edge table.
  std::map<std::pair<int, int>, int> edge_of;
  m.tri_edges.assign(nt, {-1, -1, -1});
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k) {
      int a = m.tris[t][k], b = m.tris[t][(k + 1) % 3];
      auto key = std::minmax(a, b);
      auto it = edge_of.find(key);
      int e;
      if (it == edge_of.end()) {
        e = (int)m.edges.size();
        edge_of.emplace(key, e);
        MeshEdge me;
        me.v0 = key.first;
        me.v1 = key.second;
        m.edges.push_back(me);
      } else {
        e = it->second;
      }
      MeshEdge& me = m.edges[e];
      if (me.n_tris >= 2)
        throw MeshError("non-conforming mesh: edge " + std::to_string(e) +
                        " shared by more than two triangles");
      me.tri[me.n_tris++] = t;
      m.tri_edges[t][k] = e;
    }
  }

  // Boundary tags.
  m.vertex_on_boundary.assign(nv, 0);
  for (MeshEdge& e : m.edges)
    if (e.n_tris == 1) {
      e.boundary_tag = 0;
      m.vertex_on_boundary[e.v0] = 1;
      m.vertex_on_boundary[e.v1] = 1;
    }
  for (const auto& be : input.boundary_edges) {
    auto key = std::minmax(be[0], be[1]);
    auto it = edge_of.find(key);
    if (it == edge_of.end()) throw MeshError("boundary edge not in mesh");
    MeshEdge& e = m.edges[it->second];
    if (e.n_tris != 1) throw MeshError("tagged boundary edge is interior");
    e.boundary_tag = be[2];
  }

  // Fracture faces grouped into polylines.
  int max_frac = -1;
  for (const auto& fe : input.fracture_edges) max_frac = std::max(max_frac, fe[2]);
  m.n_fractures = max_frac + 1;
  std::vector<std::vector<int>> frac_edges(m.n_fractures);  // global edge ids
  for (const auto& fe : input.fracture_edges) {
    auto key = std::minmax(fe[0], fe[1]);
    auto it = edge_of.find(key);
    if (it == edge_of.end())
      throw MeshError("fracture edge (" + std::to_string(fe[0]) + "," + std::to_string(fe[1]) +
                      ") is not a triangle edge");
    const MeshEdge& e = m.edges[it->second];
    if (e.n_tris != 2)
      throw MeshError("fracture edge (" + std::to_string(fe[0]) + "," + std::to_string(fe[1]) +
                      ") lies on the domain boundary");
    if (fe[2] < 0) throw MeshError("negative fracture id");
    frac_edges[fe[2]].push_back(it->second);
  }

  m.fracture_faces_of.resize(m.n_fractures);
  for (int g = 0; g < m.n_fractures; ++g) {
    auto& edges_g = frac_edges[g];
    if (edges_g.empty()) throw MeshError("fracture " + std::to_string(g) + " has no edges");
    // Order the edges into a polyline.
    std::map<int, std::vector<int>> at_vertex;
    for (int e : edges_g) {
      at_vertex[m.edges[e].v0].push_back(e);
      at_vertex[m.edges[e].v1].push_back(e);
    }
    std::vector<int> ends;
    for (auto& [v, es] : at_vertex) {
      if ((int)es.size() > 2)
        throw MeshError("fracture " + std::to_string(g) + " self-intersects at vertex " +
                        std::to_string(v));
      if (es.size() == 1) ends.push_back(v);
    }
    if (ends.size() != 2) throw MeshError("fracture " + std::to_string(g) + " is not an open polyline");
    int start = ends[0];
    auto lex_less = [&](int a, int b) {
      const Vec2 &pa = m.vertices[a], &pb = m.vertices[b];
      return pa.x() < pb.x() || (pa.x() == pb.x() && pa.y() < pb.y());
    };
    if (lex_less(ends[1], start)) start = ends[1];
    int v = start, prev_edge = -1;
    double arc = 0.0;
    int idx = 0;
    while (true) {
      int next_edge = -1;
      for (int e : at_vertex[v])
        if (e != prev_edge) next_edge = e;
      if (next_edge < 0) break;
      const MeshEdge& me = m.edges[next_edge];
      int w = (me.v0 == v) ? me.v1 : me.v0;
      FractureFace f;
      f.edge = next_edge;
      f.frac = g;
      f.v0 = v;
      f.v1 = w;
      Vec2 p0 = m.vertices[v], p1 = m.vertices[w];
      f.length = (p1 - p0).norm();
      f.tangent = (p1 - p0) / f.length;
      f.n_plus = Vec2(-f.tangent.y(), f.tangent.x());
      f.midpoint = 0.5 * (p0 + p1);
      f.arclength_mid = arc + 0.5 * f.length;
      f.index_in_fracture = idx++;
      arc += f.length;
      // The "+" side is opposite to n_plus (n_plus points from + to −).
      for (int s = 0; s < 2; ++s) {
        int t = me.tri[s];
        Vec2 c = (m.vertices[m.tris[t][0]] + m.vertices[m.tris[t][1]] + m.vertices[m.tris[t][2]]) / 3.0;
        if ((c - f.midpoint).dot(f.n_plus) < 0)
          f.tri_plus = t;
        else
          f.tri_minus = t;
      }
      if (f.tri_plus < 0 || f.tri_minus < 0)
        throw MeshError("fracture face side assignment failed on edge " + std::to_string(next_edge));
      int fid = (int)m.fracture_faces.size();
      m.edges[next_edge].fracture_face = fid;
      m.fracture_faces.push_back(f);
      m.fracture_faces_of[g].push_back(fid);
      prev_edge = next_edge;
      v = w;
      if (v == start) throw MeshError("fracture " + std::to_string(g) + " forms a loop");
      if (at_vertex[v].size() == 1) break;
    }
    if ((int)m.fracture_faces_of[g].size() != (int)edges_g.size())
      throw MeshError("fracture " + std::to_string(g) + " is disconnected");
  }

  // Vertex classification.
  m.vertex_frac_degree.assign(nv, 0);
  for (const FractureFace& f : m.fracture_faces) {
    m.vertex_frac_degree[m.edges[f.edge].v0]++;
    m.vertex_frac_degree[m.edges[f.edge].v1]++;
  }
  m.vertex_is_tip.assign(nv, 0);
  for (int v = 0; v < nv; ++v) m.vertex_is_tip[v] = (m.vertex_frac_degree[v] == 1);

  // Umbrella components around each vertex: triangles incident to v linked
  // across non-fracture edges. A vertex with 0 or 1 incident fracture edges
  // keeps a single displacement copy (tip rule); otherwise one copy per
  // angular sector.
  std::vector<std::vector<int>> tris_of_vertex(nv);
  for (int t = 0; t < nt; ++t)
    for (int k = 0; k < 3; ++k) tris_of_vertex[m.tris[t][k]].push_back(t);

  m.vertex_copy_offset.assign(nv + 1, 0);
  std::vector<std::vector<int>> tri_copy_of_vertex(nv);  // parallel to tris_of_vertex
  for (int v = 0; v < nv; ++v) {
    auto& star = tris_of_vertex[v];
    int ns = (int)star.size();
    tri_copy_of_vertex[v].assign(ns, 0);
    if (m.vertex_frac_degree[v] <= 1) {
      m.vertex_copy_offset[v + 1] = 1;
      continue;
    }
    std::map<int, int> local;  // triangle -> star index
    for (int i = 0; i < ns; ++i) local[star[i]] = i;
    UnionFind uf(ns);
    for (int i = 0; i < ns; ++i) {
      int t = star[i];
      for (int k = 0; k < 3; ++k) {
        const MeshEdge& e = m.edges[m.tri_edges[t][k]];
        if (e.v0 != v && e.v1 != v) continue;
        if (e.fracture_face >= 0) continue;
        if (e.n_tris != 2) continue;
        int other = e.tri[0] == t ? e.tri[1] : e.tri[0];
        auto it = local.find(other);
        if (it != local.end()) uf.unite(i, it->second);
      }
    }
    std::map<int, int> comp_id;
    for (int i = 0; i < ns; ++i) {
      int root = uf.find(i);
      auto it = comp_id.find(root);
      if (it == comp_id.end()) {
        int id = (int)comp_id.size();
        comp_id.emplace(root, id);
        tri_copy_of_vertex[v][i] = id;
      } else {
        tri_copy_of_vertex[v][i] = it->second;
      }
    }
    m.vertex_copy_offset[v + 1] = (int)comp_id.size();
  }
  for (int v = 0; v < nv; ++v) m.vertex_copy_offset[v + 1] += m.vertex_copy_offset[v];

  int next_node = m.vertex_copy_offset[nv];
  m.node_pos.resize(next_node);
  m.node_parent_vertex.assign(next_node, -1);
  m.node_parent_edge.assign(next_node, -1);
  for (int v = 0; v < nv; ++v)
    for (int c = m.vertex_copy_offset[v]; c < m.vertex_copy_offset[v + 1]; ++c) {
      m.node_pos[c] = m.vertices[v];
      m.node_parent_vertex[c] = v;
    }

  m.tri_corner_node.assign(nt, {-1, -1, -1});
  for (int v = 0; v < nv; ++v) {
    auto& star = tris_of_vertex[v];
    for (std::size_t i = 0; i < star.size(); ++i) {
      int t = star[i];
      for (int k = 0; k < 3; ++k)
        if (m.tris[t][k] == v)
          m.tri_corner_node[t][k] = m.vertex_copy_offset[v] + tri_copy_of_vertex[v][i];
    }
  }

  // Midside nodes: duplicated across fracture edges, the "+" triangle takes
  // the first copy.
  m.tri_midside_node.assign(nt, {-1, -1, -1});
  std::vector<int> edge_node(m.edges.size(), -1);
  std::vector<int> edge_node_minus(m.edges.size(), -1);
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    const MeshEdge& me = m.edges[e];
    Vec2 mid = 0.5 * (m.vertices[me.v0] + m.vertices[me.v1]);
    edge_node[e] = next_node++;
    m.node_pos.push_back(mid);
    m.node_parent_vertex.push_back(-1);
    m.node_parent_edge.push_back((int)e);
    if (me.fracture_face >= 0) {
      edge_node_minus[e] = next_node++;
      m.node_pos.push_back(mid);
      m.node_parent_vertex.push_back(-1);
      m.node_parent_edge.push_back((int)e);
    }
  }
  for (int t = 0; t < nt; ++t)
    for (int k = 0; k < 3; ++k) {
      int e = m.tri_edges[t][k];
      const MeshEdge& me = m.edges[e];
      if (me.fracture_face >= 0 && m.fracture_faces[me.fracture_face].tri_minus == t)
        m.tri_midside_node[t][k] = edge_node_minus[e];
      else
        m.tri_midside_node[t][k] = edge_node[e];
    }
  m.n_disp_nodes = next_node;

  // Cell centers: circumcenter when it lies in the closed triangle,
  // barycenter otherwise.
  m.cell_centers.resize(nt);
  m.center_is_barycenter.assign(nt, 0);
  for (int t = 0; t < nt; ++t) {
    const Vec2 &a = m.vertices[m.tris[t][0]], &b = m.vertices[m.tris[t][1]],
               &c = m.vertices[m.tris[t][2]];
    Vec2 cc = circumcenter(a, b, c);
    double area = m.tri_area[t];
    double la = tri_signed_area(cc, b, c) / area;
    double lb = tri_signed_area(a, cc, c) / area;
    double lc = tri_signed_area(a, b, cc) / area;
    if (la >= -1e-12 && lb >= -1e-12 && lc >= -1e-12) {
      m.cell_centers[t] = cc;
    } else {
      m.cell_centers[t] = (a + b + c) / 3.0;
      m.center_is_barycenter[t] = 1;
    }
  }

  return m;
}

std::array<int, 3> FracturedMesh::face_trace_nodes(int f, int side) const {
  const FractureFace& face = fracture_faces[f];
  int t = side > 0 ? face.tri_plus : face.tri_minus;
  int local_edge = -1;
  for (int k = 0; k < 3; ++k)
    if (tri_edges[t][k] == face.edge) local_edge = k;
  int n0 = -1, n1 = -1;
  for (int k = 0; k < 3; ++k) {
    if (tris[t][k] == face.v0) n0 = tri_corner_node[t][k];
    if (tris[t][k] == face.v1) n1 = tri_corner_node[t][k];
  }
  return {n0, n1, tri_midside_node[t][local_edge]};
}

double FracturedMesh::fracture_length(int frac) const {
  double len = 0.0;
  for (int f : fracture_faces_of[frac]) len += fracture_faces[f].length;
  return len;
}

// ---------------------------------------------------------------------------
// Orthogonality report

OrthogonalityReport check_orthogonality(const FracturedMesh& mesh, double /*tol_deg*/) {
  OrthogonalityReport rep;
  for (int t = 0; t < mesh.n_cells(); ++t)
    if (mesh.center_is_barycenter[t]) rep.n_barycenter_cells++;
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    const MeshEdge& me = mesh.edges[e];
    double elen = (mesh.vertices[me.v1] - mesh.vertices[me.v0]).norm();
    auto deviation = [&](const Vec2& dir, const Vec2& edge_normal) {
      double len = dir.norm();
      if (len <= 1e-12 * elen) return 0.0;  // coincident centers: direction undefined
      double c = std::abs(dir.dot(edge_normal)) / len;
      c = std::min(1.0, c);
      return std::acos(c) * 180.0 / M_PI;
    };
    Vec2 tvec = (mesh.vertices[me.v1] - mesh.vertices[me.v0]).normalized();
    Vec2 n(-tvec.y(), tvec.x());
    double dev = 0.0;
    if (me.fracture_face >= 0) {
      // Half connections from each side's center to the face midpoint.
      Vec2 mid = 0.5 * (mesh.vertices[me.v0] + mesh.vertices[me.v1]);
      dev = std::max(deviation(mid - mesh.cell_centers[me.tri[0]], n),
                     deviation(mid - mesh.cell_centers[me.tri[1]], n));
    } else if (me.n_tris == 2) {
      dev = deviation(mesh.cell_centers[me.tri[1]] - mesh.cell_centers[me.tri[0]], n);
    } else {
      Vec2 mid = 0.5 * (mesh.vertices[me.v0] + mesh.vertices[me.v1]);
      dev = deviation(mid - mesh.cell_centers[me.tri[0]], n);
    }
    if (dev > rep.max_deviation_deg) {
      rep.max_deviation_deg = dev;
      rep.worst_edge = (int)e;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// TPFA coefficients

TpfaConnectivity tpfa_coefficients(const FracturedMesh& mesh, const std::vector<double>& cell_perm,
                                   const std::vector<double>& face_aperture,
                                   const std::vector<double>& face_lambda, double tol_deg) {
  TpfaConnectivity conn;
  auto angle_deg = [](const Vec2& dir, const Vec2& n) {
    double len = dir.norm();
    if (len < 1e-300) return 90.0;
    double c = std::min(1.0, std::abs(dir.dot(n)) / len);
    return std::acos(c) * 180.0 / M_PI;
  };
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    const MeshEdge& me = mesh.edges[e];
    const Vec2 &p0 = mesh.vertices[me.v0], &p1 = mesh.vertices[me.v1];
    double len = (p1 - p0).norm();
    Vec2 tvec = (p1 - p0) / len;
    Vec2 n(-tvec.y(), tvec.x());
    Vec2 mid = 0.5 * (p0 + p1);
    if (me.fracture_face >= 0) {
      const FractureFace& f = mesh.fracture_faces[me.fracture_face];
      TpfaConnectivity::MatFrac mf;
      mf.face = me.fracture_face;
      mf.cell[0] = f.tri_plus;
      mf.cell[1] = f.tri_minus;
      for (int s = 0; s < 2; ++s) {
        int cell = mf.cell[s];
        if (angle_deg(mid - mesh.cell_centers[cell], n) > tol_deg)
          throw MeshError("TPFA admissibility violated at fracture face " +
                          std::to_string(me.fracture_face));
        double d = point_segment_distance_line(mesh.cell_centers[cell], p0, p1);
        if (d < 1e-14 * len)
          throw MeshError("TPFA degenerate half connection at fracture face " +
                          std::to_string(me.fracture_face));
        mf.t_half[s] = len * cell_perm[cell] / d;
      }
      mf.lambda_f = face_lambda[me.fracture_face];
      mf.area = len;
      conn.mat_frac.push_back(mf);
    } else if (me.n_tris == 2) {
      int k = me.tri[0], l = me.tri[1];
      Vec2 dir = mesh.cell_centers[l] - mesh.cell_centers[k];
      if (angle_deg(dir, n) > tol_deg)
        throw MeshError("TPFA admissibility violated at edge " + std::to_string(e));
      double dk = point_segment_distance_line(mesh.cell_centers[k], p0, p1);
      double dl = point_segment_distance_line(mesh.cell_centers[l], p0, p1);
      if (dk < 1e-14 * len || dl < 1e-14 * len)
        throw MeshError("TPFA degenerate connection at edge " + std::to_string(e));
      conn.cell_cell.push_back(
          {k, l, len / (dk / cell_perm[k] + dl / cell_perm[l]), (int)e});
    } else {
      int k = me.tri[0];
      if (angle_deg(mid - mesh.cell_centers[k], n) > tol_deg)
        throw MeshError("TPFA admissibility violated at boundary edge " + std::to_string(e));
      double dk = point_segment_distance_line(mesh.cell_centers[k], p0, p1);
      if (dk < 1e-14 * len)
        throw MeshError("TPFA degenerate boundary connection at edge " + std::to_string(e));
      conn.cell_bnd.push_back({k, (int)e, len * cell_perm[k] / dk, me.boundary_tag, mid, len});
    }
  }
  // Fracture tangential connections: star-delta at every shared vertex.
  std::map<int, std::vector<int>> faces_at_vertex;
  for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
    const MeshEdge& me = mesh.edges[mesh.fracture_faces[f].edge];
    faces_at_vertex[me.v0].push_back(f);
    faces_at_vertex[me.v1].push_back(f);
  }
  for (auto& [v, faces] : faces_at_vertex) {
    std::vector<double> half(faces.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < faces.size(); ++i) {
      const FractureFace& f = mesh.fracture_faces[faces[i]];
      double cond = std::pow(face_aperture[faces[i]], 3) / 12.0;
      half[i] = cond / (0.5 * f.length);
      sum += half[i];
    }
    if (faces.size() == 1) {
      if (mesh.vertex_on_boundary[v]) {
        int tag = 0;
        for (std::size_t e = 0; e < mesh.edges.size(); ++e)
          if (mesh.edges[e].n_tris == 1 &&
              (mesh.edges[e].v0 == v || mesh.edges[e].v1 == v)) {
            tag = mesh.edges[e].boundary_tag;
            break;
          }
        conn.face_bnd.push_back({faces[0], v, half[0], tag});
      }
      continue;
    }
    for (std::size_t i = 0; i < faces.size(); ++i)
      for (std::size_t j = i + 1; j < faces.size(); ++j)
        conn.face_face.push_back({faces[i], faces[j], half[i] * half[j] / sum, v});
  }
  return conn;
}

// ---------------------------------------------------------------------------
// Generators

MeshInput make_rect_mesh(double w, double h, int nx, int ny) {
  std::vector<double> xs(nx + 1), ys(ny + 1);
  for (int i = 0; i <= nx; ++i) xs[i] = w * i / nx;
  for (int j = 0; j <= ny; ++j) ys[j] = h * j / ny;
  return make_tensor_mesh(xs, ys);
}

MeshInput make_tensor_mesh(const std::vector<double>& xs, const std::vector<double>& ys) {
  MeshInput input;
  const int nx = (int)xs.size() - 1, ny = (int)ys.size() - 1;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) input.vertices.push_back(Vec2(xs[i], ys[j]));
  double xmid = 0.5 * (xs.front() + xs.back()), ymid = 0.5 * (ys.front() + ys.back());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      bool flip = (0.5 * (xs[i] + xs[i + 1]) < xmid) ^ (0.5 * (ys[j] + ys[j + 1]) < ymid);
      if (flip) {
        input.triangles.push_back({a, b, d});
        input.triangles.push_back({b, c, d});
      } else {
        input.triangles.push_back({a, b, c});
        input.triangles.push_back({a, c, d});
      }
    }
  input.tri_region.assign(input.triangles.size(), 0);
  for (int i = 0; i < nx; ++i) {
    input.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), 0});
    input.boundary_edges.push_back({vid(i, ny), vid(i + 1, ny), 2});
  }
  for (int j = 0; j < ny; ++j) {
    input.boundary_edges.push_back({vid(nx, j), vid(nx, j + 1), 1});
    input.boundary_edges.push_back({vid(0, j), vid(0, j + 1), 3});
  }
  return input;
}

MeshInput make_crisscross_mesh(double w, double h, int nx, int ny) {
  MeshInput input;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) input.vertices.push_back(Vec2(w * i / nx, h * j / ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int c = (int)input.vertices.size();
      input.vertices.push_back(Vec2(w * (i + 0.5) / nx, h * (j + 0.5) / ny));
      int a = vid(i, j), b = vid(i + 1, j), cc = vid(i + 1, j + 1), d = vid(i, j + 1);
      input.triangles.push_back({a, b, c});
      input.triangles.push_back({b, cc, c});
      input.triangles.push_back({cc, d, c});
      input.triangles.push_back({d, a, c});
    }
  input.tri_region.assign(input.triangles.size(), 0);
  for (int i = 0; i < nx; ++i) {
    input.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), 0});
    input.boundary_edges.push_back({vid(i, ny), vid(i + 1, ny), 2});
  }
  for (int j = 0; j < ny; ++j) {
    input.boundary_edges.push_back({vid(nx, j), vid(nx, j + 1), 1});
    input.boundary_edges.push_back({vid(0, j), vid(0, j + 1), 3});
  }
  return input;
}

MeshInput make_brick_mesh(double w, double h, int nx, int ny) {
  MeshInput input;
  const double dx = w / nx, dy = h / ny;
  std::vector<std::vector<int>> row_ids(ny + 1);
  for (int j = 0; j <= ny; ++j) {
    bool odd = j % 2 == 1;
    int count = odd ? nx : nx + 1;
    for (int i = 0; i < count; ++i) {
      row_ids[j].push_back((int)input.vertices.size());
      double x = odd ? (0.5 + i) * dx : i * dx;
      input.vertices.push_back(Vec2(x, j * dy));
    }
  }
  for (int j = 0; j < ny; ++j) {
    const auto& bot = row_ids[j];
    const auto& top = row_ids[j + 1];
    if (j % 2 == 0) {
      // full bottom row, offset top row
      for (int i = 0; i < nx; ++i) input.triangles.push_back({bot[i], bot[i + 1], top[i]});
      for (int i = 0; i + 1 < nx; ++i) input.triangles.push_back({bot[i + 1], top[i + 1], top[i]});
    } else {
      // offset bottom row, full top row
      for (int i = 0; i < nx; ++i) input.triangles.push_back({bot[i], top[i + 1], top[i]});
      for (int i = 0; i + 1 < nx; ++i) input.triangles.push_back({bot[i], bot[i + 1], top[i + 1]});
    }
  }
  input.tri_region.assign(input.triangles.size(), 0);
  for (int i = 0; i + 1 < (int)row_ids[0].size(); ++i)
    input.boundary_edges.push_back({row_ids[0][i], row_ids[0][i + 1], 0});
  for (int i = 0; i + 1 < (int)row_ids[ny].size(); ++i)
    input.boundary_edges.push_back({row_ids[ny][i], row_ids[ny][i + 1], 2});
  for (int j = 0; j < ny; ++j) {
    input.boundary_edges.push_back({row_ids[j].front(), row_ids[j + 1].front(), 3});
    input.boundary_edges.push_back({row_ids[j].back(), row_ids[j + 1].back(), 1});
  }
  return input;
}

int add_fracture_segment(MeshInput& input, const Vec2& a, const Vec2& b, int frac_id, double tol) {
  Vec2 d = b - a;
  double len = d.norm();
  auto on_segment = [&](const Vec2& p) {
    double cr = std::abs((p.x() - a.x()) * d.y() - (p.y() - a.y()) * d.x()) / len;
    if (cr > tol) return false;
    double t = (p - a).dot(d) / (len * len);
    return t >= -tol / len && t <= 1.0 + tol / len;
  };
  std::map<std::pair<int, int>, bool> seen;
  int count = 0;
  for (const auto& tri : input.triangles)
    for (int k = 0; k < 3; ++k) {
      auto key = std::minmax(tri[k], tri[(k + 1) % 3]);
      if (seen.count(key)) continue;
      seen[key] = true;
      if (on_segment(input.vertices[key.first]) && on_segment(input.vertices[key.second])) {
        input.fracture_edges.push_back({key.first, key.second, frac_id});
        ++count;
      }
    }
  return count;
}

}  // namespace porofrac
