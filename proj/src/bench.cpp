#include "porofrac/bench.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace porofrac {

namespace {

// 4-point Gauss-Legendre on [0, 1].
const double kGaussX[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                           0.9305681557970263};
const double kGaussW[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                           0.1739274225687269};

inline double quad1d(double v0, double vm, double v1, double z) {
  return v0 * (1.0 - z) * (1.0 - 2.0 * z) + vm * 4.0 * z * (1.0 - z) + v1 * z * (2.0 * z - 1.0);
}

/// P2 trace jump of u at local coordinate z along face f.
Vec2 jump_at(const FracturedMesh& mesh, const Vector& u, int f, double z) {
  auto np = mesh.face_trace_nodes(f, +1);
  auto nm = mesh.face_trace_nodes(f, -1);
  Vec2 j;
  for (int a = 0; a < 2; ++a) {
    double plus = quad1d(u[2 * np[0] + a], u[2 * np[2] + a], u[2 * np[1] + a], z);
    double minus = quad1d(u[2 * nm[0] + a], u[2 * nm[2] + a], u[2 * nm[1] + a], z);
    j[a] = plus - minus;
  }
  return j;
}

}  // namespace

CompressionErrors compression_errors(const FracturedMesh& mesh, const MechSystem& sys,
                                     const ContactSystem& state,
                                     const CompressionOracle& oracle) {
  (void)sys;
  const auto& faces = mesh.fracture_faces_of[0];
  const double total = mesh.fracture_length(0);
  const double lo = 0.05 * total, hi = 0.95 * total;
  std::vector<double> lam_n(state.lambda_n.data(), state.lambda_n.data() + state.lambda_n.size());
  std::vector<double> rec = reconstruct_multiplier_p2(mesh, 0, lam_n);
  double e_jump = 0, n_jump = 0, e_lam = 0, n_lam = 0, e_jn = 0;
  double arc = 0.0;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    int f = faces[i];
    const FractureFace& face = mesh.fracture_faces[f];
    for (int q = 0; q < 4; ++q) {
      double s = arc + kGaussX[q] * face.length;
      if (s < lo || s > hi) continue;
      double w = kGaussW[q] * face.length;
      Vec2 j = jump_at(mesh, state.u, f, kGaussX[q]);
      double jt = j.dot(face.tangent), jn = j.dot(face.n_plus);
      double slip = oracle.slip(s);
      e_jump += w * ((std::abs(jt) - slip) * (std::abs(jt) - slip) + jn * jn);
      n_jump += w * slip * slip;
      double lam = quad1d(rec[2 * i], rec[2 * i + 1], rec[2 * i + 2], kGaussX[q]);
      e_lam += w * (lam - oracle.lambda_n()) * (lam - oracle.lambda_n());
      n_lam += w * oracle.lambda_n() * oracle.lambda_n();
      e_jn += w * jn * jn;
    }
    arc += face.length;
  }
  CompressionErrors err;
  err.jump_rel = std::sqrt(e_jump / n_jump);
  err.lambda_rel = std::sqrt(e_lam / n_lam);
  err.jump_n_abs = std::sqrt(e_jn);
  return err;
}

double convergence_order(const std::vector<int>& n, const std::vector<double>& err) {
  // log err = c + p log h, h = 1/n
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = (int)n.size();
  for (int i = 0; i < m; ++i) {
    double x = std::log(1.0 / n[i]);
    double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

CompressionBench bench_compression(const std::vector<int>& face_counts, ContactMethod method,
                                   const std::string& out_dir) {
  CompressionBench bench;
  std::vector<double> errs_j, errs_l;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  for (int nf : face_counts) {
    MechSetup setup = make_compression_setup(nf);
    ContactSystem state = ContactSystem::zeros(*setup.mesh, 1e9);
    // Stick initial guess.
    state.lambda_n.setConstant(100.0);
    ContactStats stats = method == ContactMethod::NsNewton
                             ? ns_newton_solve(*setup.mesh, setup.scenario, state)
                             : active_set_solve(*setup.mesh, setup.scenario, state);
    if (!stats.converged) throw std::runtime_error("compression bench: solver failed");
    MechSystem sys = assemble_elasticity(*setup.mesh, setup.scenario);
    CompressionLevel level;
    level.n_faces = nf;
    level.errors = compression_errors(*setup.mesh, sys, state, setup.oracle);
    level.iterations = stats.iterations;
    level.n_faces_total = setup.mesh->n_fracture_faces();
    for (auto s : state.state)
      if (s == FaceState::Slip) level.n_slip++;
    bench.levels.push_back(level);
    errs_j.push_back(level.errors.jump_rel);
    errs_l.push_back(level.errors.lambda_rel);
    if (!out_dir.empty())
      write_face_csv(*setup.mesh, sys, state,
                     out_dir + "/compression_" + std::to_string(nf) + ".csv");
  }
  std::vector<int> ns;
  for (auto& l : bench.levels) ns.push_back(l.n_faces);
  if (ns.size() >= 2) {
    bench.order_jump = convergence_order(ns, errs_j);
    bench.order_lambda = convergence_order(ns, errs_l);
  }
  if (!out_dir.empty()) {
    std::ofstream out(out_dir + "/compression_convergence.csv");
    out.precision(17);
    out << "n_faces,err_jump_rel,err_lambda_rel,err_jump_n_abs,iterations\n";
    for (auto& l : bench.levels)
      out << l.n_faces << "," << l.errors.jump_rel << "," << l.errors.lambda_rel << ","
          << l.errors.jump_n_abs << "," << l.iterations << "\n";
    out << "# order_jump=" << bench.order_jump << " order_lambda=" << bench.order_lambda << "\n";
  }
  return bench;
}

NetworkBench bench_network(int refine, ContactMethod method, const std::string& reference_csv,
                           const std::string& out_dir) {
  NetworkBench bench;
  MechSetup setup = make_network_setup(refine);
  const FracturedMesh& mesh = *setup.mesh;
  ContactSystem state = ContactSystem::zeros(mesh, 1e9);
  state.lambda_n.setConstant(100.0);  // stick initial guess
  ContactStats stats = method == ContactMethod::NsNewton
                           ? ns_newton_solve(mesh, setup.scenario, state)
                           : active_set_solve(mesh, setup.scenario, state);
  bench.converged = stats.converged;
  bench.iterations = stats.iterations;
  bench.fractures.resize(mesh.n_fractures);
  for (int g = 0; g < mesh.n_fractures; ++g) bench.fractures[g].fracture = g;
  for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
    auto& rec = bench.fractures[mesh.fracture_faces[f].frac];
    switch (state.state[f]) {
      case FaceState::Open: rec.n_open++; break;
      case FaceState::Stick: rec.n_stick++; break;
      case FaceState::Slip: rec.n_slip++; break;
    }
  }
  MechSystem sys = assemble_elasticity(mesh, setup.scenario);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_face_csv(mesh, sys, state, out_dir + "/network_faces.csv");
    write_iteration_csv(stats, out_dir + "/network_iterations.csv");
  }
  if (!reference_csv.empty()) {
    // Reference rows: fracture, arclength, jump_n, jump_t, ...
    std::ifstream in(reference_csv);
    if (!in) throw std::runtime_error("cannot open reference " + reference_csv);
    std::string line;
    std::getline(in, line);  // header
    struct Row {
      int frac;
      double s, jn, jt;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      Row r;
      if (ls >> r.frac >> r.s >> r.jn >> r.jt) rows.push_back(r);
    }
    double e2 = 0, n2 = 0;
    for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
      const FractureFace& face = mesh.fracture_faces[f];
      JumpNT j = jump_average(mesh, sys, state.u, f);
      double best = 1e300, rjn = 0, rjt = 0;
      for (const Row& r : rows) {
        if (r.frac != face.frac) continue;
        double d = std::abs(r.s - face.arclength_mid);
        if (d < best) {
          best = d;
          rjn = r.jn;
          rjt = r.jt;
        }
      }
      e2 += face.length * ((j.n - rjn) * (j.n - rjn) + (j.t - rjt) * (j.t - rjt));
      n2 += face.length * (rjn * rjn + rjt * rjt);
    }
    bench.jump_diff_rel = std::sqrt(e2 / std::max(n2, 1e-300));
  }
  return bench;
}

}  // namespace porofrac
