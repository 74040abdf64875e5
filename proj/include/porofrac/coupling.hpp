#ifndef POROFRAC_COUPLING_HPP
#define POROFRAC_COUPLING_HPP

#include <functional>
#include <string>

#include "porofrac/flow.hpp"
#include "porofrac/mechanics.hpp"

namespace porofrac {

enum class ContactMethod { NsNewton, ActiveSet };
enum class CouplingMethod { Gp, Gu };

/// Porosity closure: phi = phi0 + b div(u - u0) + (1/M)(p^E - p^{E,0}).
double update_porosity(double div_du, double p_e, double p_e0, double phi0, double b,
                       double inv_m);

/// Aperture closure: d_f = d_0 - jump_n, face-wise.
std::vector<double> update_aperture(const FracturedMesh& mesh, const MechSystem& sys,
                                    const Vector& u, const std::vector<double>& d0);

/// Equivalent pressures cell-wise / face-wise plus outer-loop bookkeeping.
struct CouplingState {
  Vector p_e_cell;
  Vector p_e_face;
  ModelVariant variant = ModelVariant::Original;
  int outer_iterations = 0;  // cumulative map evaluations
};

/// Everything defining a coupled simulation.
struct CoupledScenario {
  const FracturedMesh* mesh = nullptr;
  MaterialTable mat;
  ModelVariant variant = ModelVariant::Original;
  FlowBc flow_bc;
  FlowSources sources;
  // mechanics loads and constraints
  Vec2 body_force = Vec2::Zero();
  Eigen::Matrix2d pre_stress = Eigen::Matrix2d::Zero();
  std::vector<std::pair<int, double>> dirichlet;
  std::vector<std::pair<int, Vec2>> neumann_edges;
  std::vector<double> friction;  // per face
  std::vector<double> d0;        // per face
  // initial pressures
  double p0_nw_matrix = 0.0, p0_w_matrix = 0.0;
  double p0_nw_fracture = 0.0, p0_w_fracture = 0.0;
  // solver configuration
  ContactMethod contact_method = ContactMethod::ActiveSet;
  double contact_c = 1e6;
  double contact_tol = 1e-6;
  CouplingMethod coupling_method = CouplingMethod::Gp;
  double coupling_tol = 1e-6;
  int max_outer = 40;
  double flow_rtol = 1e-5;
  double flow_vtol = 1e-4;
  double tpfa_tol_deg = 45.0;  // admissibility guard when building transmissibilities

  MechScenario mech_scenario(const FracturedMesh& mesh, const Vector& p_e_cell,
                             const Vector& p_e_face) const;
};

/// One accepted time level of the coupled problem.
struct CoupledState {
  double time = 0.0;
  FlowState flow;
  ContactSystem contact;
  CouplingState coupling;
  std::vector<double> phi0;  // initial porosity (reference for the closure)
  Vector u0;                 // initial displacement
  Vector p_e0_cell;          // initial matrix equivalent pressure
};

struct StepStats {
  bool converged = false;
  int outer_iterations = 0;   // g-map evaluations this step
  int flow_iterations = 0;    // cumulative flow Newton iterations
  int contact_iterations = 0; // cumulative contact iterations
  double residual = 0.0;
  std::string failure;
};

/// Per-step entries of the discrete energy identity; every dissipation term
/// carries a nonnegative sign at exact arithmetic.
struct EnergyAudit {
  double d_elastic = 0.0;
  double d_biot_storage = 0.0;
  double d_capillary_matrix = 0.0;
  double d_capillary_fracture = 0.0;
  double d_capillary_damaged = 0.0;
  double dissipation_matrix = 0.0;
  double dissipation_fracture = 0.0;
  double dissipation_interface = 0.0;
  double dissipation_boundary = 0.0;
  double contact_work = 0.0;
  double external_work = 0.0;  // loads, boundary pressure work, sources
  double lhs() const {
    return d_elastic + d_biot_storage + d_capillary_matrix + d_capillary_fracture +
           d_capillary_damaged + dissipation_matrix + dissipation_fracture +
           dissipation_interface + dissipation_boundary + contact_work;
  }
  double turnover() const;
  bool min_porosity_flagged = false;  // some cell fell below zero porosity
  bool verdict(double tol_e) const { return lhs() <= external_work + tol_e; }
};

class CoupledDriver {
 public:
  CoupledDriver(const CoupledScenario& scenario);

  /// Stationary contact solve with equivalent pressures from the initial
  /// pressures; establishes u0, lambda0 and the initial apertures.
  CoupledState initial_state();

  /// One coupled time step with the scenario's fixed point (g_p or g_u) and
  /// Newton–Krylov acceleration. On success the returned state is accepted.
  StepStats step(const CoupledState& from, double dt, CoupledState& to);

  /// Energy audit of one accepted transition.
  EnergyAudit audit_step(const CoupledState& from, const CoupledState& to, double dt);

  const CoupledScenario& scenario() const { return scenario_; }

 private:
  struct MapResult {
    FlowState flow;
    ContactSystem contact;
    Vector p_e_cell, p_e_face;
    std::vector<double> aperture;
    int flow_iterations = 0;
    int contact_iterations = 0;
    bool ok = false;
    std::string failure;
    FlowBreakdown breakdown;
  };
  // Applies contact+flow (g_p order) or flow+contact (g_u order).
  MapResult apply_gp(const CoupledState& from, double dt, const Vector& p_e_cell,
                     const Vector& p_e_face, const MapResult* warm);
  MapResult apply_gu(const CoupledState& from, double dt, const Vector& u, const MapResult* warm);
  std::vector<double> cell_permeability(const CoupledState& from) const;

  CoupledScenario scenario_;
  const FracturedMesh& mesh_;
  FlowBreakdown last_breakdown_;  // of the last accepted step, for the audit
};

struct TransientOptions {
  double t_end = 0.0;
  double dt_init = 0.001 * 86400.0;  // 0.001 days
  TimestepPolicy ts;
  int snapshot_every = 0;            // VTK cadence in accepted steps; 0 = none
  std::string out_dir;
};

struct TransientRecord {
  double time = 0.0;
  double dt = 0.0;
  double mean_aperture = 0.0;
  int n_open = 0, n_stick = 0, n_slip = 0;
  int outer_iterations = 0;
  int flow_iterations = 0;
  int contact_iterations = 0;
  EnergyAudit audit;
};

struct TransientResult {
  std::vector<TransientRecord> records;
  CoupledState final_state;
  bool completed = false;
  std::string failure;
  long total_outer = 0;
  long total_flow = 0;
  long total_contact = 0;
};

/// Full time loop: initial stationary solve, adaptive stepping, per-step
/// audit; snapshots and CSV series are written when out_dir is set.
TransientResult run_transient(const CoupledScenario& scenario, const TransientOptions& options);

void write_timeseries_csv(const std::vector<TransientRecord>& records, const std::string& path);

}  // namespace porofrac

#endif
