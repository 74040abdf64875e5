#include "porofrac/presets.hpp"

#include <cmath>
#include <functional>

namespace porofrac {

namespace {

/// Symmetric breakpoints: uniform spacing h on [-inner, inner], geometric
/// growth (ratio 1.4) out to +-outer.
std::vector<double> graded_axis(double inner, double outer, double h) {
  std::vector<double> right;
  double x = inner;
  right.push_back(x);
  double w = h;
  while (x < outer) {
    w *= 1.7;
    x += w;
    right.push_back(std::min(x, outer));
  }
  std::vector<double> xs;
  for (auto it = right.rbegin(); it != right.rend(); ++it) xs.push_back(-*it);
  int n_uni = (int)std::lround(2.0 * inner / h);
  for (int i = 1; i < n_uni; ++i) xs.push_back(-inner + i * h);
  for (double v : right) xs.push_back(v);
  return xs;
}

void apply_boundary_traction(const FracturedMesh& mesh, MechScenario& scenario,
                             const std::function<Vec2(const Vec2&, const Vec2&)>& traction) {
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    const MeshEdge& me = mesh.edges[e];
    if (me.n_tris != 1) continue;
    const Vec2 &p0 = mesh.vertices[me.v0], &p1 = mesh.vertices[me.v1];
    Vec2 t = (p1 - p0).normalized();
    Vec2 n(-t.y(), t.x());
    int tri = me.tri[0];
    Vec2 c = (mesh.vertices[mesh.tris[tri][0]] + mesh.vertices[mesh.tris[tri][1]] +
              mesh.vertices[mesh.tris[tri][2]]) /
             3.0;
    if ((c - 0.5 * (p0 + p1)).dot(n) > 0) n = -n;  // outward
    scenario.neumann_edges.push_back({(int)e, traction(0.5 * (p0 + p1), n)});
  }
}

}  // namespace

MechSetup make_compression_setup(int n_fracture_faces) {
  MechSetup setup;
  const double l = 1.0;      // half length
  const double box = 160.0;  // half box size
  const double h = 2.0 * l / n_fracture_faces;
  std::vector<double> xs = graded_axis(l + 4 * h, box, h);
  std::vector<double> ys = graded_axis(3 * h, box, h);
  MeshInput input = make_tensor_mesh(xs, ys);
  int n_added = add_fracture_segment(input, Vec2(-l, 0), Vec2(l, 0), 0);
  if (n_added != n_fracture_faces) throw MeshError("compression mesh: fracture face mismatch");
  setup.mesh = std::make_shared<FracturedMesh>(build_mesh(input));

  const CompressionOracle& o = setup.oracle;
  setup.scenario.young = o.young;
  setup.scenario.poisson = o.poisson;
  setup.scenario.set_uniform_friction(*setup.mesh, o.friction);
  // Remote uniaxial compression along the direction at angle psi from the
  // fracture (the mesh lives in the fracture-aligned frame).
  Vec2 axis(std::cos(o.psi), std::sin(o.psi));
  Eigen::Matrix2d sigma = -o.sigma_remote * axis * axis.transpose();
  apply_boundary_traction(*setup.mesh, setup.scenario,
                          [sigma](const Vec2&, const Vec2& n) -> Vec2 { return sigma * n; });
  // Rigid modes: pin the two box vertices on the fracture line.
  setup.scenario.pin_vertex_near(*setup.mesh, Vec2(-box, 0), true, true);
  setup.scenario.pin_vertex_near(*setup.mesh, Vec2(box, 0), false, true);
  return setup;
}

int network_fracture_count() { return 6; }

MechSetup make_network_setup(int refine) {
  MechSetup setup;
  const int n = 32 << refine;
  MeshInput input = make_brick_mesh(2.0, 1.0, n, n);
  struct Seg {
    Vec2 a, b;
    int frac;
  };
  const std::vector<Seg> segs = {
      {{0.25, 0.75}, {0.5, 0.5}, 0},    {{0.5, 0.5}, {0.875, 0.5}, 0},
      {{1.0, 0.8125}, {1.25, 0.5625}, 1}, {{0.9375, 0.25}, {1.4375, 0.25}, 2},
      {{1.375, 0.5}, {1.625, 0.75}, 3},   {{1.8125, 1.0}, {1.9375, 0.875}, 4},
      {{0.25, 0.125}, {0.625, 0.5}, 5}};
  for (const Seg& s : segs)
    if (add_fracture_segment(input, s.a, s.b, s.frac) == 0)
      throw MeshError("network mesh: fracture segment missed the lattice");
  setup.mesh = std::make_shared<FracturedMesh>(build_mesh(input));
  const FracturedMesh& mesh = *setup.mesh;

  setup.scenario.young = 4e9;
  setup.scenario.poisson = 0.2;
  setup.scenario.fix_boundary(mesh, 0, true, true, Vec2(0, 0));
  setup.scenario.fix_boundary(mesh, 2, true, true, Vec2(0.005, -0.002));
  // Friction boosted near the polyline endpoints of each fracture.
  setup.scenario.friction.resize(mesh.n_fracture_faces());
  std::vector<std::array<Vec2, 2>> tips(mesh.n_fractures);
  for (int g = 0; g < mesh.n_fractures; ++g) {
    const auto& faces = mesh.fracture_faces_of[g];
    tips[g][0] = mesh.vertices[mesh.fracture_faces[faces.front()].v0];
    tips[g][1] = mesh.vertices[mesh.fracture_faces[faces.back()].v1];
  }
  for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
    const FractureFace& face = mesh.fracture_faces[f];
    double d2 = std::min((face.midpoint - tips[face.frac][0]).squaredNorm(),
                         (face.midpoint - tips[face.frac][1]).squaredNorm());
    setup.scenario.friction[f] = 0.5 * (1.0 + 10.0 * std::exp(-d2 / 0.005));
  }
  return setup;
}

DryingSetup make_drying_setup(ContactMethod contact, CouplingMethod coupling,
                              ModelVariant variant, bool single_phase) {
  DryingSetup setup;
  const double w = 30.0, h = 10.0;
  MeshInput input = make_brick_mesh(w, h, 48, 16);
  struct Seg {
    Vec2 a, b;
    int frac;
  };
  const std::vector<Seg> segs = {
      {{0.0, 5.0}, {7.5, 5.0}, 0},       {{0.625, 2.5}, {3.125, 7.5}, 1},
      {{1.25, 7.5}, {3.75, 2.5}, 2},     {{1.875, 2.5}, {4.375, 7.5}, 3},
      {{2.5, 7.5}, {5.0, 2.5}, 4},       {{3.125, 2.5}, {5.625, 7.5}, 5}};
  for (const Seg& s : segs)
    if (add_fracture_segment(input, s.a, s.b, s.frac) == 0)
      throw MeshError("drying mesh: fracture segment missed the lattice");
  setup.mesh = std::make_shared<FracturedMesh>(build_mesh(input));
  const FracturedMesh& mesh = *setup.mesh;

  CoupledScenario& sc = setup.scenario;
  sc.mesh = setup.mesh.get();
  sc.mat = MaterialTable{};  // Callovo-Oxfordian-like defaults
  sc.variant = variant;
  sc.contact_method = contact;
  sc.contact_c = contact == ContactMethod::ActiveSet ? 1e6 : 1e9;
  sc.coupling_method = coupling;
  sc.friction.assign(mesh.n_fracture_faces(), sc.mat.friction);
  sc.d0.assign(mesh.n_fracture_faces(), sc.mat.d0);

  // Mechanics: axial rollers top and bottom, pressures on the lateral walls,
  // in-plane pre-stress (compression negative in the tension-positive
  // convention), and a horizontal body force standing in for the hoop-stress
  // support so the unequal wall pressures balance in the plane section.
  sc.pre_stress << -12e6, 0, 0, -16e6;
  const double p_atm = 1e5, sigma_nt = 10.95e6;
  MechScenario probe;
  apply_boundary_traction(mesh, probe, [&](const Vec2& x, const Vec2& n) -> Vec2 {
    double p = x.x() < 0.5 * w ? p_atm : sigma_nt;
    return Vec2(-p * n.x(), -p * n.y());
  });
  double net_fx = 0.0, area = 0.0;
  for (auto& [eid, t] : probe.neumann_edges) {
    const MeshEdge& me = mesh.edges[eid];
    if (me.boundary_tag == 0 || me.boundary_tag == 2) continue;  // rollers instead
    double len = (mesh.vertices[me.v1] - mesh.vertices[me.v0]).norm();
    net_fx += len * t.x();
    sc.neumann_edges.push_back({eid, t});
  }
  for (int t = 0; t < mesh.n_cells(); ++t) area += mesh.tri_area[t];
  sc.body_force = Vec2(-net_fx / area, 0.0);
  MechScenario roller;
  roller.fix_boundary(mesh, 0, false, true, Vec2(0, 0));
  roller.fix_boundary(mesh, 2, false, true, Vec2(0, 0));
  roller.pin_vertex_near(mesh, Vec2(0.5 * w, 0), true, false);
  sc.dirichlet = roller.dirichlet;

  // Flow: gas imposed on the inner (left) wall, liquid on the outer wall.
  const RockLaws& laws = sc.mat.laws;
  sc.p0_nw_matrix = sc.p0_w_matrix = 4e6;
  sc.p0_nw_fracture = sc.p0_w_fracture = 1e5;
  if (single_phase) {
    sc.flow_bc.matrix_dirichlet[3] = {{1e5, 1e5}};
    sc.flow_bc.fracture_dirichlet[3] = {{1e5, 1e5}};
  } else {
    double pc_m = -laws.r_matrix * std::log(1.0 - 0.35);        // s_nw = 0.35
    double pc_f = -laws.r_fracture * std::log(1e-8);            // s_nw = 1 - 1e-8
    sc.flow_bc.matrix_dirichlet[3] = {{1e5, 1e5 - pc_m}};
    sc.flow_bc.fracture_dirichlet[3] = {{1e5, 1e5 - pc_f}};
  }
  sc.flow_bc.matrix_dirichlet[1] = {{4e6, 4e6}};
  return setup;
}

}  // namespace porofrac
