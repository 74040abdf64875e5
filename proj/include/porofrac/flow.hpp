#ifndef POROFRAC_FLOW_HPP
#define POROFRAC_FLOW_HPP

#include <array>
#include <map>
#include <optional>

#include "porofrac/laws.hpp"
#include "porofrac/mesh.hpp"
#include "porofrac/numerics.hpp"

namespace porofrac {

inline constexpr int kNw = 0;  // non-wetting phase index
inline constexpr int kW = 1;   // wetting phase index

enum class ModelVariant { Original, Modified };

/// Equivalent pressure p^E = sum_alpha p^alpha s^alpha - U(p_c); the modified
/// variant drops the capillary energy term (matrix only).
double equivalent_pressure(double p_nw, double p_w, const RockLaws& laws, Rock rock,
                           ModelVariant variant);

/// Phase pressures, interface pressures, porosity and aperture at one time
/// level. Saturations are derived from the Corey laws on demand.
struct FlowState {
  std::array<Vector, 2> p_cell;  // [phase][cell], Pa
  std::array<Vector, 2> p_face;  // [phase][fracture face], Pa
  std::vector<double> phi;       // matrix porosity per cell
  std::vector<double> aperture;  // d_f per fracture face, m
  // Interface (trace) pressures per face and side (0: +, 1: −).
  std::array<std::array<Vector, 2>, 2> iface;  // [side][phase]
  std::array<std::vector<char>, 2> iface_fallback;

  static FlowState uniform(const FracturedMesh& mesh, double p_nw_m, double p_w_m, double p_nw_f,
                           double p_w_f, double phi0, double d_f);
  double capillary_cell(int cell) const { return p_cell[kNw][cell] - p_cell[kW][cell]; }
  double capillary_face(int f) const { return p_face[kNw][f] - p_face[kW][f]; }
};

struct FlowBc {
  struct Entry {
    double p[2];  // Dirichlet phase pressures (Pa)
  };
  std::map<int, Entry> matrix_dirichlet;    // by boundary tag
  std::map<int, Entry> fracture_dirichlet;  // by boundary tag (fracture endpoints)
};

struct FlowSources {
  std::array<Vector, 2> cell;  // volume rate per phase (m^3/s per cell), may be empty
  std::array<Vector, 2> face;
};

/// Monotone two-point interface flux, upwinded between the damaged-layer and
/// fracture mobilities (per unit face area).
double interface_flux(double jump_p, double s_a, double s_f, double lambda_f,
                      const RockLaws& laws, bool wetting);

/// Everything frozen during one flow solve: geometry, transmissibilities,
/// mechanical coupling state and the previous time level.
struct FlowDriver {
  const FracturedMesh* mesh = nullptr;
  const TpfaConnectivity* conn = nullptr;
  MaterialTable mat;
  ModelVariant variant = ModelVariant::Original;
  FlowBc bc;
  FlowSources sources;
  double dt = 1.0;
  const FlowState* old_state = nullptr;
  // Mechanical part of the porosity closure: phi_geo = phi^0 + b div(u - u^0);
  // the full porosity is phi_geo + (1/M)(p^E_m - p^{E,0}_m).
  std::vector<double> phi_geo;
  Vector p_e0_cell;
  // Fracture apertures at the current mechanical iterate.
  std::vector<double> aperture;
  int max_local_iter = 50;  // interface elimination cap

  int n_cells() const { return mesh->n_cells(); }
  int n_faces() const { return mesh->n_fracture_faces(); }
  int n_base_unknowns() const { return 2 * (n_cells() + n_faces()); }
  double porosity(int cell, double p_nw, double p_w) const;
};

/// Result of the local nonlinear interface solver on one face side.
struct InterfaceLocal {
  bool converged = false;
  int iterations = 0;
  double pg[2];                 // interface pressures
  double v[2];                  // matrix half-flux out of the cell (m^3/s)
  double acc[2];                // damaged-layer accumulation (m^3/s)
  Eigen::Matrix2d dv_dpk, dv_dpf, dacc_dpk, dacc_dpf;
};

/// Solves the two-phase flux-continuity system for the interface pressures of
/// one (face, side) pair; warm started from guess.
InterfaceLocal eliminate_interface_pressures(const FlowDriver& drv, int mf_index, int side,
                                             const double p_cell[2], const double p_face[2],
                                             const double guess[2], double tol = 1e-12);

/// Per-step conservation and dissipation bookkeeping (per phase where arrayed).
struct FlowBreakdown {
  double accumulation[2] = {0, 0};    // total mass-volume change / dt
  double boundary_influx[2] = {0, 0}; // into the domain through Dirichlet faces
  double source[2] = {0, 0};
  double dissipation_matrix = 0.0;    // sum T eta (dp)^2, both phases
  double dissipation_fracture = 0.0;
  double dissipation_interface = 0.0;
  double dissipation_boundary = 0.0;
  double boundary_work[2] = {0, 0};   // influx * Dirichlet pressure
  double source_work[2] = {0, 0};     // h * p
};

/// Assembles the implicit-Euler residual (and optionally the analytic
/// Jacobian triplets and conservation breakdown) at state_new. The unknown
/// layout is [cell0 nw, cell0 w, cell1 nw, ..., face0 nw, face0 w, ...] plus
/// appended interface unknowns for face-sides where the local solver was
/// flagged non-convergent.
struct FlowAssembly {
  Vector residual;
  SparseMatrix jacobian;  // empty unless with_jacobian
  FlowBreakdown breakdown;
  std::vector<std::pair<int, int>> fallback_ids;  // (mat_frac index, side) appended
};
FlowAssembly assemble_flow_residual(const FlowDriver& drv, FlowState& state_new,
                                    bool with_jacobian);

struct FlowStats {
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;
  std::string failure;
  FlowBreakdown breakdown;  // at the converged state
};

/// Newton with analytic Jacobian and ILU(0)-preconditioned restarted GMRES.
/// Stops when the relative residual falls below rtol or the maximum
/// normalized primary-variable change falls below vtol (pressures scaled by
/// 1 MPa). Non-convergence within max_iter signals the time step controller.
FlowStats flow_newton_solve(const FlowDriver& drv, FlowState& state, double rtol = 1e-5,
                            double vtol = 1e-4, int max_iter = 50);

struct TimestepPolicy {
  double growth = 1.1;
  double dt_max = 10.0 * 365.0 * 86400.0;  // 10 years
  double dt_min = 1e-6;                    // abort threshold (s)
};

/// Adaptive time step rule: grow by rho on success (capped), halve on failure.
double adaptive_timestep(double dt_prev, bool success, const TimestepPolicy& policy = {});

}  // namespace porofrac

#endif
