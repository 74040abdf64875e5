#ifndef POROFRAC_BENCH_HPP
#define POROFRAC_BENCH_HPP

#include <string>
#include <vector>

#include "porofrac/presets.hpp"

namespace porofrac {

/// Relative L2 errors of the displacement jump and the reconstructed normal
/// multiplier against the analytic solution, over the central 90% of the
/// fracture.
struct CompressionErrors {
  double jump_rel = 0.0;
  double lambda_rel = 0.0;
  double jump_n_abs = 0.0;  // absolute L2 of the normal jump (exact value is 0)
};
CompressionErrors compression_errors(const FracturedMesh& mesh, const MechSystem& sys,
                                     const ContactSystem& state, const CompressionOracle& oracle);

struct CompressionLevel {
  int n_faces = 0;
  CompressionErrors errors;
  int iterations = 0;
  int n_slip = 0, n_faces_total = 0;
};

struct CompressionBench {
  std::vector<CompressionLevel> levels;
  double order_jump = 0.0;    // least-squares slope vs h
  double order_lambda = 0.0;
};

CompressionBench bench_compression(const std::vector<int>& face_counts, ContactMethod method,
                                   const std::string& out_dir = "");

struct NetworkFractureState {
  int fracture = 0;
  int n_open = 0, n_stick = 0, n_slip = 0;
};

struct NetworkBench {
  std::vector<NetworkFractureState> fractures;
  int iterations = 0;
  bool converged = false;
  // Self-convergence against a reference face CSV (optional).
  double jump_diff_rel = -1.0;
};

NetworkBench bench_network(int refine, ContactMethod method,
                           const std::string& reference_csv = "",
                           const std::string& out_dir = "");

/// Least-squares slope of log(err) against log(h) with h = 1/n.
double convergence_order(const std::vector<int>& n, const std::vector<double>& err);

}  // namespace porofrac

#endif
