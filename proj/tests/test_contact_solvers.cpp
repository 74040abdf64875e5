#include <doctest.h>

#include <cmath>
#include <iostream>

#include "porofrac/bench.hpp"
#include "porofrac/presets.hpp"

using namespace porofrac;

namespace {
// Reduced copy of the single-fracture compression benchmark for unit tests.
MechSetup small_compression() { return make_compression_setup(20); }
}  // namespace

TEST_CASE("zero-load problem converges from the open initial guess") {
  FracturedMesh mesh = build_mesh(([]() {
    MeshInput in = make_rect_mesh(4.0, 4.0, 4, 4);
    add_fracture_segment(in, Vec2(1, 2), Vec2(3, 2), 0);
    return in;
  })());
  MechScenario sc;
  sc.young = 1e9;
  sc.poisson = 0.25;
  sc.set_uniform_friction(mesh, 0.5);
  for (int tag : {0, 1, 2, 3}) sc.fix_boundary(mesh, tag, true, true, Vec2::Zero());
  ContactSystem st = ContactSystem::zeros(mesh, 1e9);
  ContactStats stats = active_set_solve(mesh, sc, st);
  CHECK(stats.converged);
  CHECK(stats.iterations <= 1);
  CHECK(st.u.norm() == doctest::Approx(0.0));
  CHECK(st.lambda_n.norm() == doctest::Approx(0.0));

  ContactSystem st2 = ContactSystem::zeros(mesh, 1e9);
  ContactStats stats2 = ns_newton_solve(mesh, sc, st2);
  CHECK(stats2.converged);
  CHECK(st2.u.norm() == doctest::Approx(0.0));
}

TEST_CASE("all faces prescribed open under tension gives the pure elastic solution") {
  FracturedMesh mesh = build_mesh(([]() {
    MeshInput in = make_rect_mesh(4.0, 4.0, 8, 8);
    add_fracture_segment(in, Vec2(1.0, 2.0), Vec2(3.0, 2.0), 0);
    return in;
  })());
  MechScenario sc;
  sc.young = 1e9;
  sc.poisson = 0.25;
  sc.set_uniform_friction(mesh, 0.5);
  sc.fix_boundary(mesh, 0, true, true, Vec2::Zero());
  for (std::size_t e = 0; e < mesh.edges.size(); ++e)
    if (mesh.edges[e].boundary_tag == 2 && mesh.edges[e].n_tris == 1)
      sc.neumann_edges.push_back({(int)e, Vec2(0.0, 5e6)});  // tension opens the fracture
  ContactSystem st = ContactSystem::zeros(mesh, 1e9);
  ContactStats stats = ns_newton_solve(mesh, sc, st);
  REQUIRE(stats.converged);
  CHECK(st.lambda_n.norm() == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(st.lambda_t.norm() == doctest::Approx(0.0).epsilon(1e-10));
  for (auto s : st.state) CHECK(s == FaceState::Open);
  MechSystem sys = assemble_elasticity(mesh, sc);
  for (int f = 0; f < mesh.n_fracture_faces(); ++f)
    CHECK(jump_average(mesh, sys, st.u, f).n < 1e-12);  // opening, not penetration
}

TEST_CASE("compression benchmark: both solvers and both initial guesses") {
  MechSetup setup = small_compression();
  const FracturedMesh& mesh = *setup.mesh;
  const double lam_exact = setup.oracle.lambda_n();

  struct Run {
    const char* name;
    bool stick;
    double c;
    bool ns;
  };
  std::vector<Run> runs = {{"AS stick c=1e6", true, 1e6, false},
                           {"AS stick c=1e9", true, 1e9, false},
                           {"AS stick c=1e11", true, 1e11, false},
                           {"AS open  c=1e9", false, 1e9, false},
                           {"NS stick c=1e6", true, 1e6, true},
                           {"NS stick c=1e9", true, 1e9, true},
                           {"NS stick c=1e11", true, 1e11, true},
                           {"NS open  c=1e9", false, 1e9, true}};
  Vector lam_ref;
  Vector u_as, u_ns;
  for (const Run& run : runs) {
    ContactSystem st = ContactSystem::zeros(mesh, run.c);
    if (run.stick) st.lambda_n.setConstant(100.0);
    ContactStats stats = run.ns ? ns_newton_solve(mesh, setup.scenario, st)
                                : active_set_solve(mesh, setup.scenario, st);
    INFO(run.name);
    REQUIRE(stats.converged);
    std::cout << run.name << ": iterations=" << stats.iterations << "\n";
    CHECK(stats.iterations <= (run.stick ? 4 : 5));
    // every face slips and lambda_n approaches the analytic constant
    for (auto s : st.state) CHECK(s == FaceState::Slip);
    double mean = st.lambda_n.mean();
    CHECK(mean == doctest::Approx(lam_exact).epsilon(0.08));
    // converged multiplier invariant under c (within 10x solver tolerance)
    if (lam_ref.size() == 0)
      lam_ref = st.lambda_n;
    else
      CHECK((st.lambda_n - lam_ref).norm() / lam_ref.norm() < 1e-5);
    if (run.stick && run.c == 1e9) (run.ns ? u_ns : u_as) = st.u;

    // dissipation signs at the converged state
    MechSystem sys = assemble_elasticity(mesh, setup.scenario);
    for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
      JumpNT j = jump_average(mesh, sys, st.u, f);
      JumpNT jp = jump_average(mesh, sys, st.u_prev, f);
      CHECK((j.t - jp.t) * st.lambda_t[f] >= -1e-6 * std::abs(st.lambda_t[f]));
      CHECK((j.n - jp.n) * st.lambda_n[f] >= -1e-6 * std::abs(st.lambda_n[f]));
    }
    auto rep = check_local_conditions(mesh, sys, st, setup.scenario.friction, 1e-6);
    CHECK(rep.ok);
  }
  // the two algorithms land on the same solution
  REQUIRE(u_as.size() > 0);
  REQUIRE(u_ns.size() > 0);
  CHECK((u_as - u_ns).norm() / u_as.norm() < 1e-5);
}

TEST_CASE("non-convergence is reported with history") {
  MechSetup setup = small_compression();
  ContactSystem st = ContactSystem::zeros(*setup.mesh, 1e9);
  ContactStats stats = ns_newton_solve(*setup.mesh, setup.scenario, st, 1e-6, 1);
  CHECK(!stats.converged);
  CHECK(!stats.failure.empty());
  CHECK(!stats.history.empty());
}
