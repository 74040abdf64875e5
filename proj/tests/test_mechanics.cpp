#include <doctest.h>

#include <cmath>

#include "porofrac/mechanics.hpp"
#include "porofrac/numerics.hpp"

using namespace porofrac;

namespace {

FracturedMesh patch_mesh() { return build_mesh(make_rect_mesh(1.0, 1.0, 4, 4)); }

/// Dirichlet on every boundary dof from a given displacement field.
void dirichlet_from_field(const FracturedMesh& mesh, MechScenario& sc,
                          const std::function<Vec2(const Vec2&)>& field) {
  for (int tag : {0, 1, 2, 3}) sc.fix_boundary(mesh, tag, true, true, Vec2::Zero());
  for (auto& [dof, val] : sc.dirichlet) {
    Vec2 u = field(mesh.node_pos[dof / 2]);
    val = u[dof % 2];
  }
}

Vector solve_linear(const FracturedMesh& mesh, const MechScenario& sc) {
  MechSystem sys = assemble_elasticity(mesh, sc);
  std::vector<Vec2> pos(sys.n_dofs);
  for (int n = 0; n < mesh.n_disp_nodes; ++n) pos[2 * n] = pos[2 * n + 1] = mesh.node_pos[n];
  return lu_solve(sys.stiffness, sys.rhs, nested_dissection_order(pos));
}

}  // namespace

TEST_CASE("patch test: linear displacement field reproduced exactly") {
  FracturedMesh mesh = patch_mesh();
  MechScenario sc;
  sc.young = 25e9;
  sc.poisson = 0.25;
  auto field = [](const Vec2& p) {
    return Vec2(1e-3 * p.x() + 2e-3 * p.y(), -5e-4 * p.x() + 3e-4 * p.y());
  };
  dirichlet_from_field(mesh, sc, field);
  Vector u = solve_linear(mesh, sc);
  double err = 0.0;
  for (int n = 0; n < mesh.n_disp_nodes; ++n) {
    Vec2 exact = field(mesh.node_pos[n]);
    err = std::max(err, std::abs(u[2 * n] - exact.x()));
    err = std::max(err, std::abs(u[2 * n + 1] - exact.y()));
  }
  CHECK(err < 1e-10 * 1e-3);
}

TEST_CASE("uniaxial compression of an unfractured square") {
  FracturedMesh mesh = build_mesh(make_rect_mesh(1.0, 1.0, 6, 6));
  MechScenario sc;
  sc.young = 25e9;
  sc.poisson = 0.25;
  sc.fix_boundary(mesh, 0, false, true, Vec2::Zero());  // bottom roller
  sc.fix_boundary(mesh, 3, true, false, Vec2::Zero());  // left roller
  for (std::size_t e = 0; e < mesh.edges.size(); ++e)
    if (mesh.edges[e].boundary_tag == 2 && mesh.edges[e].n_tris == 1)
      sc.neumann_edges.push_back({(int)e, Vec2(0.0, -100e6)});
  Vector u = solve_linear(mesh, sc);
  // plane strain: eps_yy = (1 - nu^2)/E * sigma_yy, eps_xx = -nu/(1-nu) eps_yy
  double eps_yy = (1.0 - 0.25 * 0.25) / 25e9 * (-100e6);
  double eps_xx = -0.25 / (1.0 - 0.25) * eps_yy;
  for (int n = 0; n < mesh.n_disp_nodes; ++n) {
    Vec2 p = mesh.node_pos[n];
    CHECK(u[2 * n] == doctest::Approx(eps_xx * p.x()).epsilon(1e-9));
    CHECK(u[2 * n + 1] == doctest::Approx(eps_yy * p.y()).epsilon(1e-9));
  }
}

TEST_CASE("zero loads and zero Dirichlet give zero displacement") {
  FracturedMesh mesh = patch_mesh();
  MechScenario sc;
  sc.young = 1e9;
  sc.poisson = 0.3;
  for (int tag : {0, 1, 2, 3}) sc.fix_boundary(mesh, tag, true, true, Vec2::Zero());
  Vector u = solve_linear(mesh, sc);
  CHECK(u.norm() == doctest::Approx(0.0));
}

TEST_CASE("poisson ratio outside (-1, 1/2) is rejected") {
  FracturedMesh mesh = patch_mesh();
  MechScenario sc;
  sc.young = 1e9;
  sc.poisson = 0.5;
  CHECK_THROWS_AS(assemble_elasticity(mesh, sc), std::invalid_argument);
}

namespace {
struct JumpFixture {
  FracturedMesh mesh;
  MechSystem sys;
  int mid_face;
  JumpFixture()
      : mesh(([]() {
          MeshInput input = make_rect_mesh(6.0, 4.0, 6, 4);
          if (add_fracture_segment(input, Vec2(1, 2), Vec2(5, 2), 0) != 4)
            throw std::runtime_error("fixture");
          return build_mesh(input);
        })()) {
    MechScenario sc;
    sc.young = 1e9;
    sc.poisson = 0.25;
    sc.set_uniform_friction(mesh, 0.5);
    sys = assemble_elasticity(mesh, sc);
    mid_face = mesh.fracture_faces_of[0][1];  // interior face, fully duplicated
  }
};
}  // namespace

TEST_CASE("jump average: continuity, constant offset and Simpson weights") {
  JumpFixture fx;
  const FracturedMesh& mesh = fx.mesh;
  Vector u = Vector::Zero(2 * mesh.n_disp_nodes);
  // equal traces on both sides -> zero jump
  for (int n = 0; n < mesh.n_disp_nodes; ++n) {
    u[2 * n] = 7e-4;
    u[2 * n + 1] = -3e-4;
  }
  JumpNT j = jump_average(mesh, fx.sys, u, fx.mid_face);
  CHECK(j.n == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(j.t == doctest::Approx(0.0).epsilon(1e-15));

  // side + trace = (1e-3, 0), side - zero, fracture along x with n+ = (0,1)
  u.setZero();
  auto plus_nodes = mesh.face_trace_nodes(fx.mid_face, +1);
  for (int n : plus_nodes) u[2 * n] = 1e-3;
  const FractureFace& face = mesh.fracture_faces[fx.mid_face];
  REQUIRE(std::abs(face.n_plus.y()) == doctest::Approx(1.0));
  j = jump_average(mesh, fx.sys, u, fx.mid_face);
  CHECK(std::abs(j.n) < 1e-18);
  CHECK(std::abs(j.t) == doctest::Approx(1e-3).epsilon(1e-14));

  // quadratic trace: zero at endpoints, m at the midside node -> mean 2m/3
  u.setZero();
  double m = 4.2e-3;
  u[2 * plus_nodes[2]] = m;  // midside node, x component
  j = jump_average(mesh, fx.sys, u, fx.mid_face);
  CHECK(std::abs(j.t) == doctest::Approx(2.0 * m / 3.0).epsilon(1e-14));
}

TEST_CASE("complementarity residual branch values") {
  // open face: lambda = 0, jump_n = -1e-4, c = 1e9 -> b = -1e5 < 0, C = 0
  auto r = complementarity_residual(0.0, 0.0, -1e-4, 0.0, 1e9, 0.5);
  CHECK(r.b == doctest::Approx(-1e5));
  CHECK(r.c_n == 0.0);
  CHECK(r.c_t == 0.0);

  // penetration: jump_n = +1e-4 -> C_n = -1e5 Pa
  r = complementarity_residual(0.0, 0.0, 1e-4, 0.0, 1e9, 0.5);
  CHECK(r.c_n == doctest::Approx(-1e5));

  // stick state: exact zero of both functions
  r = complementarity_residual(1e6, 1e5, 0.0, 0.0, 1e9, 0.5);
  CHECK(r.b == doctest::Approx(1e6));
  CHECK(r.a == doctest::Approx(1e5));
  CHECK(r.c_n == 0.0);
  CHECK(r.c_t == 0.0);  // 1e5 * 5e5 - 1e5 * 5e5
}

TEST_CASE("face classification follows the iteration sets") {
  CHECK(classify_face(-1e5, 0.0, 0.5) == FaceState::Open);
  CHECK(classify_face(1e6, 1e5, 0.5) == FaceState::Stick);   // 1e5 < 5e5
  CHECK(classify_face(1e6, 6e5, 0.5) == FaceState::Slip);    // 6e5 >= 5e5 > 0
  // boundary cases: b = 0 goes to open; |a| = Fb goes to slip
  CHECK(classify_face(0.0, 1.0, 0.5) == FaceState::Open);
  CHECK(classify_face(1e6, 5e5, 0.5) == FaceState::Slip);
}

TEST_CASE("local conditions check flags violations per face") {
  JumpFixture fx;
  ContactSystem st = ContactSystem::zeros(fx.mesh, 1e9);
  std::vector<double> friction(fx.mesh.n_fracture_faces(), 0.5);
  // all-open state with negative jumps: admissible
  Vector u = Vector::Zero(2 * fx.mesh.n_disp_nodes);
  for (int f = 0; f < fx.mesh.n_fracture_faces(); ++f) {
    auto nodes = fx.mesh.face_trace_nodes(f, +1);
    const FractureFace& face = fx.mesh.fracture_faces[f];
    for (int n : nodes) {
      u[2 * n] -= 1e-4 * face.n_plus.x();
      u[2 * n + 1] -= 1e-4 * face.n_plus.y();
    }
  }
  st.u = u;
  auto rep = check_local_conditions(fx.mesh, fx.sys, st, friction, 1e-9);
  CHECK(rep.ok);
  // perturb one multiplier to a negative value
  st.lambda_n[fx.mid_face] = -1.0;
  rep = check_local_conditions(fx.mesh, fx.sys, st, friction, 1e-9);
  CHECK(!rep.ok);
  CHECK(rep.violating_faces.size() == 1);
  CHECK(rep.violating_faces[0] == fx.mid_face);
}

TEST_CASE("multiplier reconstruction: constants, single spikes and linears") {
  JumpFixture fx;
  const FracturedMesh& mesh = fx.mesh;
  int nf = (int)mesh.fracture_faces_of[0].size();
  // constant field reproduced
  std::vector<double> vals(mesh.n_fracture_faces(), 3.5e6);
  auto rec = reconstruct_multiplier_p2(mesh, 0, vals);
  for (double v : rec) CHECK(v == doctest::Approx(3.5e6).epsilon(1e-14));

  // single nonzero face integrates to value * length
  std::fill(vals.begin(), vals.end(), 0.0);
  int f1 = mesh.fracture_faces_of[0][1];
  vals[f1] = 2.0;
  rec = reconstruct_multiplier_p2(mesh, 0, vals);
  double integral = 0.0;
  for (int i = 0; i < nf; ++i) {
    double len = mesh.fracture_faces[mesh.fracture_faces_of[0][i]].length;
    // Simpson on the quadratic nodal profile
    integral += len / 6.0 * (rec[2 * i] + 4.0 * rec[2 * i + 1] + rec[2 * i + 2]);
  }
  CHECK(integral == doctest::Approx(2.0 * mesh.fracture_faces[f1].length).epsilon(1e-12));

  // linear-in-arclength face means reproduce the linear nodal field
  auto arcs = fracture_trace_arclengths(mesh, 0);
  for (int i = 0; i < nf; ++i) {
    int f = mesh.fracture_faces_of[0][i];
    vals[f] = 5.0 + 3.0 * mesh.fracture_faces[f].arclength_mid;
  }
  rec = reconstruct_multiplier_p2(mesh, 0, vals);
  for (std::size_t k = 1; k + 1 < rec.size(); ++k)
    CHECK(rec[k] == doctest::Approx(5.0 + 3.0 * arcs[k]).epsilon(1e-12));
}

TEST_CASE("cell divergence of a linear field is exact") {
  FracturedMesh mesh = patch_mesh();
  Vector u(2 * mesh.n_disp_nodes);
  for (int n = 0; n < mesh.n_disp_nodes; ++n) {
    Vec2 p = mesh.node_pos[n];
    u[2 * n] = 2e-3 * p.x();
    u[2 * n + 1] = -7e-4 * p.y();
  }
  auto div = cell_divergence(mesh, u);
  for (double d : div) CHECK(d == doctest::Approx(2e-3 - 7e-4).epsilon(1e-12));
}
