#include "porofrac/coupling.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "porofrac/io.hpp"

namespace porofrac {

double update_porosity(double div_du, double p_e, double p_e0, double phi0, double b,
                       double inv_m) {
  return phi0 + b * div_du + inv_m * (p_e - p_e0);
}

std::vector<double> update_aperture(const FracturedMesh& mesh, const MechSystem& sys,
                                    const Vector& u, const std::vector<double>& d0) {
  std::vector<double> d(mesh.n_fracture_faces());
  for (int f = 0; f < mesh.n_fracture_faces(); ++f)
    d[f] = d0[f] - jump_average(mesh, sys, u, f).n;
  return d;
}

double EnergyAudit::turnover() const {
  return std::abs(d_elastic) + std::abs(d_biot_storage) + std::abs(d_capillary_matrix) +
         std::abs(d_capillary_fracture) + std::abs(d_capillary_damaged) + dissipation_matrix +
         dissipation_fracture + dissipation_interface + dissipation_boundary +
         std::abs(contact_work) + std::abs(external_work);
}

MechScenario CoupledScenario::mech_scenario(const FracturedMesh& mesh, const Vector& p_e_cell,
                                            const Vector& p_e_face) const {
  MechScenario s;
  s.young = mat.young;
  s.poisson = mat.poisson;
  s.body_force = body_force;
  s.pre_stress = pre_stress;
  s.biot_b = mat.biot_b;
  s.dirichlet = dirichlet;
  s.neumann_edges = neumann_edges;
  s.friction = friction;
  if (p_e_cell.size()) {
    s.p_e_cell.assign(p_e_cell.data(), p_e_cell.data() + p_e_cell.size());
    s.p_e_face.assign(p_e_face.data(), p_e_face.data() + p_e_face.size());
  }
  return s;
}

CoupledDriver::CoupledDriver(const CoupledScenario& scenario)
    : scenario_(scenario), mesh_(*scenario.mesh) {}

std::vector<double> CoupledDriver::cell_permeability(const CoupledState& from) const {
  std::vector<double> k(mesh_.n_cells());
  for (int c = 0; c < mesh_.n_cells(); ++c)
    k[c] = kozeny_carman(from.flow.phi[c], scenario_.mat.phi_m0, scenario_.mat.k_m0);
  return k;
}

CoupledState CoupledDriver::initial_state() {
  CoupledState st;
  st.time = 0.0;
  const auto& sc = scenario_;
  st.flow = FlowState::uniform(mesh_, sc.p0_nw_matrix, sc.p0_w_matrix, sc.p0_nw_fracture,
                               sc.p0_w_fracture, sc.mat.phi_m0, sc.mat.d0);
  for (int f = 0; f < mesh_.n_fracture_faces(); ++f) st.flow.aperture[f] = sc.d0[f];
  st.phi0.assign(mesh_.n_cells(), sc.mat.phi_m0);
  double pe_m =
      equivalent_pressure(sc.p0_nw_matrix, sc.p0_w_matrix, sc.mat.laws, Rock::Matrix, sc.variant);
  double pe_f = equivalent_pressure(sc.p0_nw_fracture, sc.p0_w_fracture, sc.mat.laws,
                                    Rock::Fracture, ModelVariant::Original);
  st.p_e0_cell = Vector::Constant(mesh_.n_cells(), pe_m);
  st.coupling.p_e_cell = st.p_e0_cell;
  st.coupling.p_e_face = Vector::Constant(mesh_.n_fracture_faces(), pe_f);
  st.coupling.variant = sc.variant;

  // Stationary contact solve with the initial equivalent pressures.
  st.contact = ContactSystem::zeros(mesh_, sc.contact_c);
  MechScenario ms = sc.mech_scenario(mesh_, st.coupling.p_e_cell, st.coupling.p_e_face);
  ContactStats stats = sc.contact_method == ContactMethod::NsNewton
                           ? ns_newton_solve(mesh_, ms, st.contact, sc.contact_tol)
                           : active_set_solve(mesh_, ms, st.contact, sc.contact_tol);
  if (!stats.converged)
    throw std::runtime_error("initial stationary contact solve failed: " + stats.failure);
  st.u0 = st.contact.u;
  st.contact.u_prev = st.contact.u;
  MechSystem sys = assemble_elasticity(mesh_, ms);
  st.flow.aperture = update_aperture(mesh_, sys, st.contact.u, sc.d0);
  return st;
}

CoupledDriver::MapResult CoupledDriver::apply_gp(const CoupledState& from, double dt,
                                                 const Vector& p_e_cell, const Vector& p_e_face,
                                                 const MapResult* warm) {
  MapResult r;
  const auto& sc = scenario_;
  MechScenario ms = sc.mech_scenario(mesh_, p_e_cell, p_e_face);
  r.contact = warm ? warm->contact : from.contact;
  r.contact.u_prev = from.contact.u;
  r.contact.c = sc.contact_c;
  ContactStats cstats = sc.contact_method == ContactMethod::NsNewton
                            ? ns_newton_solve(mesh_, ms, r.contact, sc.contact_tol)
                            : active_set_solve(mesh_, ms, r.contact, sc.contact_tol);
  r.contact_iterations = cstats.iterations;
  if (!cstats.converged) {
    r.failure = "contact solve: " + cstats.failure;
    return r;
  }
  MechSystem sys = assemble_elasticity(mesh_, ms);
  r.aperture = update_aperture(mesh_, sys, r.contact.u, sc.d0);

  FlowDriver drv;
  drv.mesh = &mesh_;
  auto perm = cell_permeability(from);
  TpfaConnectivity conn;
  try {
    conn = tpfa_coefficients(mesh_, perm, r.aperture,
                             std::vector<double>(mesh_.n_fracture_faces(), sc.mat.lambda_f),
                             sc.tpfa_tol_deg);
  } catch (const MeshError& e) {
    r.failure = e.what();
    return r;
  }
  drv.conn = &conn;
  drv.mat = sc.mat;
  drv.variant = sc.variant;
  drv.bc = sc.flow_bc;
  drv.sources = sc.sources;
  drv.dt = dt;
  drv.old_state = &from.flow;
  Vector du = r.contact.u - from.u0;
  auto div_du = cell_divergence(mesh_, du);
  drv.phi_geo.resize(mesh_.n_cells());
  for (int c = 0; c < mesh_.n_cells(); ++c)
    drv.phi_geo[c] = from.phi0[c] + sc.mat.biot_b * div_du[c];
  drv.p_e0_cell = from.p_e0_cell;
  drv.aperture = r.aperture;

  r.flow = warm ? warm->flow : from.flow;
  FlowStats fstats = flow_newton_solve(drv, r.flow, sc.flow_rtol, sc.flow_vtol);
  r.flow_iterations = fstats.iterations;
  if (!fstats.converged) {
    r.failure = "flow solve: " + fstats.failure;
    return r;
  }
  r.breakdown = fstats.breakdown;
  r.p_e_cell.resize(mesh_.n_cells());
  for (int c = 0; c < mesh_.n_cells(); ++c)
    r.p_e_cell[c] = equivalent_pressure(r.flow.p_cell[kNw][c], r.flow.p_cell[kW][c], sc.mat.laws,
                                        Rock::Matrix, sc.variant);
  r.p_e_face.resize(mesh_.n_fracture_faces());
  for (int f = 0; f < mesh_.n_fracture_faces(); ++f)
    r.p_e_face[f] = equivalent_pressure(r.flow.p_face[kNw][f], r.flow.p_face[kW][f], sc.mat.laws,
                                        Rock::Fracture, ModelVariant::Original);
  r.ok = true;
  return r;
}

CoupledDriver::MapResult CoupledDriver::apply_gu(const CoupledState& from, double dt,
                                                 const Vector& u, const MapResult* warm) {
  MapResult r;
  const auto& sc = scenario_;
  // Geometry frozen from the input displacement.
  MechScenario ms0 = sc.mech_scenario(mesh_, Vector(), Vector());
  MechSystem sys0 = assemble_elasticity(mesh_, ms0);
  std::vector<double> aperture = update_aperture(mesh_, sys0, u, sc.d0);
  for (double& d : aperture) d = std::max(d, 1e-12);

  FlowDriver drv;
  drv.mesh = &mesh_;
  auto perm = cell_permeability(from);
  TpfaConnectivity conn;
  try {
    conn = tpfa_coefficients(mesh_, perm, aperture,
                             std::vector<double>(mesh_.n_fracture_faces(), sc.mat.lambda_f),
                             sc.tpfa_tol_deg);
  } catch (const MeshError& e) {
    r.failure = e.what();
    return r;
  }
  drv.conn = &conn;
  drv.mat = sc.mat;
  drv.variant = sc.variant;
  drv.bc = sc.flow_bc;
  drv.sources = sc.sources;
  drv.dt = dt;
  drv.old_state = &from.flow;
  Vector du = u - from.u0;
  auto div_du = cell_divergence(mesh_, du);
  drv.phi_geo.resize(mesh_.n_cells());
  for (int c = 0; c < mesh_.n_cells(); ++c)
    drv.phi_geo[c] = from.phi0[c] + sc.mat.biot_b * div_du[c];
  drv.p_e0_cell = from.p_e0_cell;
  drv.aperture = aperture;

  r.flow = warm ? warm->flow : from.flow;
  FlowStats fstats = flow_newton_solve(drv, r.flow, sc.flow_rtol, sc.flow_vtol);
  r.flow_iterations = fstats.iterations;
  if (!fstats.converged) {
    r.failure = "flow solve: " + fstats.failure;
    return r;
  }
  r.breakdown = fstats.breakdown;
  r.p_e_cell.resize(mesh_.n_cells());
  for (int c = 0; c < mesh_.n_cells(); ++c)
    r.p_e_cell[c] = equivalent_pressure(r.flow.p_cell[kNw][c], r.flow.p_cell[kW][c], sc.mat.laws,
                                        Rock::Matrix, sc.variant);
  r.p_e_face.resize(mesh_.n_fracture_faces());
  for (int f = 0; f < mesh_.n_fracture_faces(); ++f)
    r.p_e_face[f] = equivalent_pressure(r.flow.p_face[kNw][f], r.flow.p_face[kW][f], sc.mat.laws,
                                        Rock::Fracture, ModelVariant::Original);

  MechScenario ms = sc.mech_scenario(mesh_, r.p_e_cell, r.p_e_face);
  r.contact = warm ? warm->contact : from.contact;
  r.contact.u_prev = from.contact.u;
  r.contact.c = sc.contact_c;
  ContactStats cstats = sc.contact_method == ContactMethod::NsNewton
                            ? ns_newton_solve(mesh_, ms, r.contact, sc.contact_tol)
                            : active_set_solve(mesh_, ms, r.contact, sc.contact_tol);
  r.contact_iterations = cstats.iterations;
  if (!cstats.converged) {
    r.failure = "contact solve: " + cstats.failure;
    return r;
  }
  MechSystem sys = assemble_elasticity(mesh_, ms);
  r.aperture = update_aperture(mesh_, sys, r.contact.u, sc.d0);
  r.ok = true;
  return r;
}

StepStats CoupledDriver::step(const CoupledState& from, double dt, CoupledState& to) {
  StepStats stats;
  const auto& sc = scenario_;
  const bool use_gp = sc.coupling_method == CouplingMethod::Gp;

  Vector z;
  if (use_gp) {
    z = Vector(from.coupling.p_e_cell.size() + from.coupling.p_e_face.size());
    z << from.coupling.p_e_cell, from.coupling.p_e_face;
  } else {
    z = from.contact.u;
  }
  const int nc = mesh_.n_cells();

  auto eval = [&](const Vector& zz, const MapResult* warm) -> MapResult {
    stats.outer_iterations++;
    if (use_gp)
      return apply_gp(from, dt, zz.head(nc), zz.tail(zz.size() - nc), warm);
    return apply_gu(from, dt, zz, warm);
  };
  auto map_output = [&](const MapResult& r) -> Vector {
    if (use_gp) {
      Vector out(r.p_e_cell.size() + r.p_e_face.size());
      out << r.p_e_cell, r.p_e_face;
      return out;
    }
    return r.contact.u;
  };

  MapResult base = eval(z, nullptr);
  stats.flow_iterations += base.flow_iterations;
  stats.contact_iterations += base.contact_iterations;
  if (!base.ok) {
    stats.failure = base.failure;
    return stats;
  }
  double scale = std::max(z.norm(), use_gp ? 1.0 : 1e-9);
  Vector n_res = z - map_output(base);

  while (true) {
    stats.residual = n_res.norm() / scale;
    if (stats.residual <= sc.coupling_tol) break;
    if (stats.outer_iterations >= sc.max_outer) {
      stats.failure = "coupling fixed point did not converge";
      return stats;
    }
    // Newton–Krylov on z - g(z) = 0 with finite-difference directional
    // derivatives (unpreconditioned residual form).
    bool probe_failed = false;
    LinearOperator op = [&](const Vector& v) -> Vector {
      double vn = v.norm();
      if (vn == 0.0 || probe_failed) return v;
      double eps = std::sqrt(2.2e-16) * (1.0 + z.norm()) / vn;
      MapResult probe = eval(z + eps * v, &base);
      stats.flow_iterations += probe.flow_iterations;
      stats.contact_iterations += probe.contact_iterations;
      if (!probe.ok) {
        probe_failed = true;
        return v;
      }
      return v - (map_output(probe) - map_output(base)) / eps;
    };
    KrylovConfig cfg;
    cfg.restart = 15;
    cfg.max_iter = std::min(15, sc.max_outer - stats.outer_iterations);
    cfg.rel_tol = 0.05;
    KrylovResult kr = gmres_solve(op, -n_res, cfg, nullptr);
    if (probe_failed) {
      stats.failure = "coupling probe solve failed";
      return stats;
    }
    Vector dz = kr.x;
    if (!dz.allFinite() || dz.norm() == 0.0) dz = -n_res;  // fall back to Picard
    z += dz;
    MapResult next = eval(z, &base);
    stats.flow_iterations += next.flow_iterations;
    stats.contact_iterations += next.contact_iterations;
    if (!next.ok) {
      stats.failure = next.failure;
      return stats;
    }
    base = std::move(next);
    Vector new_res = z - map_output(base);
    bool small_increment = dz.norm() <= sc.coupling_tol * scale;
    n_res = new_res;
    if (small_increment) {
      stats.residual = n_res.norm() / scale;
      break;
    }
  }

  to = from;  // copies the immutable references (phi0, u0, p_e0)
  to.time = from.time + dt;
  to.flow = base.flow;
  to.contact = base.contact;
  to.coupling.p_e_cell = base.p_e_cell;
  to.coupling.p_e_face = base.p_e_face;
  to.coupling.variant = sc.variant;
  to.coupling.outer_iterations = stats.outer_iterations;
  to.flow.aperture = base.aperture;
  stats.converged = true;
  // Stash the breakdown for the audit.
  last_breakdown_ = base.breakdown;
  return stats;
}

EnergyAudit CoupledDriver::audit_step(const CoupledState& from, const CoupledState& to,
                                      double dt) {
  EnergyAudit a;
  const auto& sc = scenario_;
  const RockLaws& laws = sc.mat.laws;
  a.d_elastic = 0.5 * (elastic_inner(mesh_, sc.mat.young, sc.mat.poisson, to.contact.u,
                                     to.contact.u) -
                       elastic_inner(mesh_, sc.mat.young, sc.mat.poisson, from.contact.u,
                                     from.contact.u));
  const double inv_m = sc.mat.inv_m();
  for (int c = 0; c < mesh_.n_cells(); ++c) {
    double vol = mesh_.tri_area[c];
    a.d_biot_storage += vol * 0.5 * inv_m *
                        (to.coupling.p_e_cell[c] * to.coupling.p_e_cell[c] -
                         from.coupling.p_e_cell[c] * from.coupling.p_e_cell[c]);
    double u1 = laws.capillary_energy(to.flow.capillary_cell(c), Rock::Matrix);
    double u0 = laws.capillary_energy(from.flow.capillary_cell(c), Rock::Matrix);
    if (sc.variant == ModelVariant::Original)
      a.d_capillary_matrix += vol * (to.flow.phi[c] * u1 - from.flow.phi[c] * u0);
    else
      a.d_capillary_matrix += vol * from.phi0[c] * (u1 - u0);
    if (to.flow.phi[c] < 0.0) a.min_porosity_flagged = true;
  }
  for (int f = 0; f < mesh_.n_fracture_faces(); ++f) {
    double area = mesh_.fracture_faces[f].length;
    double u1 = laws.capillary_energy(to.flow.capillary_face(f), Rock::Fracture);
    double u0 = laws.capillary_energy(from.flow.capillary_face(f), Rock::Fracture);
    a.d_capillary_fracture += area * (to.flow.aperture[f] * u1 - from.flow.aperture[f] * u0);
    if (sc.mat.d_a > 0.0) {
      for (int side = 0; side < 2; ++side) {
        double pcg1 = to.flow.iface[side][kNw][f] - to.flow.iface[side][kW][f];
        double pcg0 = from.flow.iface[side][kNw][f] - from.flow.iface[side][kW][f];
        a.d_capillary_damaged += area * sc.mat.d_a * sc.mat.phi_a *
                                 (laws.capillary_energy(pcg1, Rock::Damaged) -
                                  laws.capillary_energy(pcg0, Rock::Damaged));
      }
    }
  }
  a.dissipation_matrix = dt * last_breakdown_.dissipation_matrix;
  a.dissipation_fracture = dt * last_breakdown_.dissipation_fracture;
  a.dissipation_interface = dt * last_breakdown_.dissipation_interface;
  a.dissipation_boundary = dt * last_breakdown_.dissipation_boundary;

  MechScenario ms = sc.mech_scenario(mesh_, to.coupling.p_e_cell, to.coupling.p_e_face);
  MechSystem sys = assemble_elasticity(mesh_, ms);
  for (int f = 0; f < mesh_.n_fracture_faces(); ++f) {
    JumpNT j1 = jump_average(mesh_, sys, to.contact.u, f);
    JumpNT j0 = jump_average(mesh_, sys, from.contact.u, f);
    double area = mesh_.fracture_faces[f].length;
    a.contact_work += area * (to.contact.lambda_n[f] * (j1.n - j0.n) +
                              to.contact.lambda_t[f] * (j1.t - j0.t));
  }
  Vector du = to.contact.u - from.contact.u;
  a.external_work = load_work(mesh_, ms, du);
  for (int ph = 0; ph < 2; ++ph)
    a.external_work += dt * (last_breakdown_.boundary_work[ph] + last_breakdown_.source_work[ph]);
  return a;
}

// ---------------------------------------------------------------------------

TransientResult run_transient(const CoupledScenario& scenario, const TransientOptions& options) {
  TransientResult result;
  CoupledDriver driver(scenario);
  CoupledState current = driver.initial_state();
  double dt = options.dt_init;
  int accepted = 0;
  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);
  while (current.time < options.t_end - 1e-9) {
    dt = std::min(dt, options.t_end - current.time);
    CoupledState next;
    StepStats st = driver.step(current, dt, next);
    if (!st.converged) {
      dt = adaptive_timestep(dt, false, options.ts);
      if (dt < options.ts.dt_min) {
        result.failure = "time step underflow: " + st.failure;
        if (!options.out_dir.empty())
          write_vtk_snapshot(*scenario.mesh, current.flow, current.coupling.p_e_cell,
                             options.out_dir + "/abort_state.vtk");
        result.final_state = std::move(current);
        return result;
      }
      continue;
    }
    EnergyAudit audit = driver.audit_step(current, next, dt);
    TransientRecord rec;
    rec.time = next.time;
    rec.dt = dt;
    double mean_d = 0.0;
    for (double d : next.flow.aperture) mean_d += d;
    rec.mean_aperture =
        next.flow.aperture.empty() ? 0.0 : mean_d / (double)next.flow.aperture.size();
    for (auto s : next.contact.state)
      (s == FaceState::Open ? rec.n_open : s == FaceState::Stick ? rec.n_stick : rec.n_slip)++;
    rec.outer_iterations = st.outer_iterations;
    rec.flow_iterations = st.flow_iterations;
    rec.contact_iterations = st.contact_iterations;
    rec.audit = audit;
    result.records.push_back(rec);
    result.total_outer += st.outer_iterations;
    result.total_flow += st.flow_iterations;
    result.total_contact += st.contact_iterations;
    current = std::move(next);
    ++accepted;
    if (options.snapshot_every > 0 && accepted % options.snapshot_every == 0 &&
        !options.out_dir.empty())
      write_vtk_snapshot(*scenario.mesh, current.flow, current.coupling.p_e_cell,
                         options.out_dir + "/snapshot_" + std::to_string(accepted) + ".vtk");
    dt = adaptive_timestep(dt, true, options.ts);
  }
  result.completed = true;
  result.final_state = std::move(current);
  if (!options.out_dir.empty()) {
    write_timeseries_csv(result.records, options.out_dir + "/timeseries.csv");
    write_vtk_snapshot(*scenario.mesh, result.final_state.flow,
                       result.final_state.coupling.p_e_cell, options.out_dir + "/final.vtk");
  }
  return result;
}

void write_timeseries_csv(const std::vector<TransientRecord>& records, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "t,dt,mean_aperture,n_open,n_stick,n_slip,outer_iterations,flow_iterations,"
         "contact_iterations,d_elastic,d_biot,d_cap_matrix,d_cap_fracture,d_cap_damaged,"
         "diss_matrix,diss_fracture,diss_interface,diss_boundary,contact_work,external_work\n";
  for (const auto& r : records) {
    out << r.time << "," << r.dt << "," << r.mean_aperture << "," << r.n_open << "," << r.n_stick
        << "," << r.n_slip << "," << r.outer_iterations << "," << r.flow_iterations << ","
        << r.contact_iterations << "," << r.audit.d_elastic << "," << r.audit.d_biot_storage
        << "," << r.audit.d_capillary_matrix << "," << r.audit.d_capillary_fracture << ","
        << r.audit.d_capillary_damaged << "," << r.audit.dissipation_matrix << ","
        << r.audit.dissipation_fracture << "," << r.audit.dissipation_interface << ","
        << r.audit.dissipation_boundary << "," << r.audit.contact_work << ","
        << r.audit.external_work << "\n";
  }
}

}  // namespace porofrac
