#ifndef POROFRAC_MECHANICS_HPP
#define POROFRAC_MECHANICS_HPP

#include <array>
#include <string>
#include <vector>

#include "porofrac/mesh.hpp"
#include "porofrac/numerics.hpp"

namespace porofrac {

enum class FaceState { Open, Stick, Slip };
const char* to_string(FaceState s);

/// Displacement coefficients, face-wise multipliers and contact bookkeeping.
/// lambda is the negative traction on the "+" side: lambda_n >= 0 in
/// compression, lambda_t along the face tangent.
struct ContactSystem {
  Vector u;       // 2 dofs per P2 node
  Vector u_prev;  // previous time level, defines the slip increment
  Vector lambda_n;
  Vector lambda_t;
  std::vector<FaceState> state;
  double c = 1e9;  // complementarity parameter (N/m^3)

  static ContactSystem zeros(const FracturedMesh& mesh, double c);
};

/// Loads and couplings seen by the contact mechanics solve.
struct MechScenario {
  double young = 1.0;
  double poisson = 0.25;
  Vec2 body_force = Vec2::Zero();
  Eigen::Matrix2d pre_stress = Eigen::Matrix2d::Zero();  // tension positive
  double biot_b = 0.0;
  std::vector<double> p_e_cell;  // equivalent pressure per cell (empty = 0)
  std::vector<double> p_e_face;  // equivalent pressure per fracture face
  std::vector<double> friction;  // F per face, >= 0
  std::vector<std::pair<int, double>> dirichlet;      // (dof, value)
  std::vector<std::pair<int, Vec2>> neumann_edges;    // (edge id, traction)

  /// Fixes components of all node copies on boundary edges with this tag.
  void fix_boundary(const FracturedMesh& mesh, int tag, bool fix_x, bool fix_y, Vec2 value);
  /// Fixes components of every copy of the vertex nearest to p.
  void pin_vertex_near(const FracturedMesh& mesh, const Vec2& p, bool fix_x, bool fix_y,
                       Vec2 value = Vec2::Zero());
  void set_uniform_friction(const FracturedMesh& mesh, double f);
};

/// Face-average jump functional: a sparse linear map from displacement dofs
/// to the jump vector (Simpson average of the P2 traces, side + minus side −).
struct FaceJumpOperator {
  std::array<std::vector<std::pair<int, double>>, 2> comp;  // x and y weights
  Vec2 apply(const Vector& u) const;
};

/// Assembled elasticity operator with contact coupling blocks.
struct MechSystem {
  int n_dofs = 0;
  SparseMatrix stiffness;  // Dirichlet rows replaced by scaled identity
  Vector rhs;              // includes Dirichlet values, Neumann, pressures, pre-stress
  std::vector<char> is_dirichlet;
  std::vector<FaceJumpOperator> jump_ops;  // per fracture face
  std::vector<int> lu_order;               // fill-reducing order hint for full system
  double row_scale = 1.0;                  // scale used on Dirichlet identity rows
};

MechSystem assemble_elasticity(const FracturedMesh& mesh, const MechScenario& scenario);

/// Face-average jump of a displacement field, split into normal and
/// tangential components in the face frame.
struct JumpNT {
  double n;
  double t;
};
JumpNT jump_average(const FracturedMesh& mesh, const MechSystem& sys, const Vector& u, int face);

/// Complementarity pair (C_n, C_t): zero exactly at states satisfying the
/// local Coulomb conditions. b = lambda_n + c*jump_n is the friction bound,
/// a = lambda_t + c*(jump_t - jump_t_prev).
struct Complementarity {
  double c_n;
  double c_t;
  double b;
  double a;
};
Complementarity complementarity_residual(double lambda_n, double lambda_t, double jump_n,
                                         double djump_t, double c, double friction);

FaceState classify_face(double b, double a, double friction);

struct FaceSets {
  std::vector<int> open;   // I_n : b <= 0
  std::vector<int> stick;  // I_tau : |a| < F b
  std::vector<int> slip;   // A : |a| >= F b, b > 0
};
FaceSets classify_faces(const FracturedMesh& mesh, const MechSystem& sys,
                        const ContactSystem& state, const std::vector<double>& friction);

struct ContactIterationRecord {
  int iteration;
  double residual;
  int n_open, n_stick, n_slip;
};

struct ContactStats {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  std::vector<ContactIterationRecord> history;
  std::string failure;
};

/// Regularized non-smooth Newton on G(u, lambda) = 0. Stops when the scaled
/// residual norm falls below tol relative to the initial one.
ContactStats ns_newton_solve(const FracturedMesh& mesh, const MechScenario& scenario,
                             ContactSystem& state, double tol = 1e-6, int max_iter = 60);

/// Active set iteration with the per-state simplified (piecewise) linear
/// equations; stops on a stationary partition with small nonlinear residual.
ContactStats active_set_solve(const FracturedMesh& mesh, const MechScenario& scenario,
                              ContactSystem& state, double tol = 1e-6, int max_iter = 60);

struct LocalConditionsReport {
  bool ok = true;
  std::vector<int> violating_faces;
  double worst = 0.0;
};

/// Face-by-face check of the local Coulomb conditions, including the
/// velocity-form slip condition.
LocalConditionsReport check_local_conditions(const FracturedMesh& mesh, const MechSystem& sys,
                                             const ContactSystem& state,
                                             const std::vector<double>& friction, double tol);

/// Continuous piecewise-quadratic nodal reconstruction of a face-wise
/// constant multiplier field along one fracture (lumped L2 projection).
/// Returns one value per P2 trace node ordered along the polyline:
/// vertex0, midside0, vertex1, midside1, ..., vertexN.
std::vector<double> reconstruct_multiplier_p2(const FracturedMesh& mesh, int fracture,
                                              const std::vector<double>& face_values);

/// Arclength positions matching reconstruct_multiplier_p2 node order.
std::vector<double> fracture_trace_arclengths(const FracturedMesh& mesh, int fracture);

/// Per-face CSV: fracture id, arclength, jump_n, jump_t, lambda_n, lambda_t, state.
void write_face_csv(const FracturedMesh& mesh, const MechSystem& sys, const ContactSystem& state,
                    const std::string& path);
void write_iteration_csv(const ContactStats& stats, const std::string& path);

/// Cell averages of div(u) for the porosity closure.
std::vector<double> cell_divergence(const FracturedMesh& mesh, const Vector& u);

/// Elastic bilinear form value \int sigma(u):eps(v).
double elastic_inner(const FracturedMesh& mesh, double young, double poisson, const Vector& u,
                     const Vector& v);

/// Work of the scenario loads (body force, Neumann tractions and pre-stress)
/// against a displacement increment.
double load_work(const FracturedMesh& mesh, const MechScenario& scenario, const Vector& du);

}  // namespace porofrac

#endif
