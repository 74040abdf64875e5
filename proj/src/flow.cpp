#include "porofrac/flow.hpp"

#include <algorithm>
#include <cmath>

namespace porofrac {

namespace {

inline double phase_sat(int phase, double p_c, const RockLaws& laws, Rock rock) {
  double s_nw = laws.s_nw(p_c, rock);
  return phase == kNw ? s_nw : 1.0 - s_nw;
}
inline double phase_sat_dpc(int phase, double p_c, const RockLaws& laws, Rock rock) {
  double d = laws.ds_nw(p_c, rock);
  return phase == kNw ? d : -d;
}
inline double pc_sign(int phase) { return phase == kNw ? 1.0 : -1.0; }

}  // namespace

double equivalent_pressure(double p_nw, double p_w, const RockLaws& laws, Rock rock,
                           ModelVariant variant) {
  double pc = p_nw - p_w;
  double s = laws.s_nw(pc, rock);
  double pe = p_nw * s + p_w * (1.0 - s);
  if (!(rock == Rock::Matrix && variant == ModelVariant::Modified))
    pe -= laws.capillary_energy(pc, rock);
  return pe;
}

double interface_flux(double jump_p, double s_a, double s_f, double lambda_f,
                      const RockLaws& laws, bool wetting) {
  double eta_a = laws.mobility(s_a, Rock::Damaged, wetting);
  double eta_f = laws.mobility(s_f, Rock::Fracture, wetting);
  return jump_p >= 0.0 ? eta_a * lambda_f * jump_p : eta_f * lambda_f * jump_p;
}

FlowState FlowState::uniform(const FracturedMesh& mesh, double p_nw_m, double p_w_m,
                             double p_nw_f, double p_w_f, double phi0, double d_f) {
  FlowState s;
  s.p_cell[kNw] = Vector::Constant(mesh.n_cells(), p_nw_m);
  s.p_cell[kW] = Vector::Constant(mesh.n_cells(), p_w_m);
  s.p_face[kNw] = Vector::Constant(mesh.n_fracture_faces(), p_nw_f);
  s.p_face[kW] = Vector::Constant(mesh.n_fracture_faces(), p_w_f);
  s.phi.assign(mesh.n_cells(), phi0);
  s.aperture.assign(mesh.n_fracture_faces(), d_f);
  for (int side = 0; side < 2; ++side) {
    s.iface[side][kNw] = Vector::Constant(mesh.n_fracture_faces(), p_nw_m);
    s.iface[side][kW] = Vector::Constant(mesh.n_fracture_faces(), p_w_m);
    s.iface_fallback[side].assign(mesh.n_fracture_faces(), 0);
  }
  return s;
}

double FlowDriver::porosity(int cell, double p_nw, double p_w) const {
  double pe = equivalent_pressure(p_nw, p_w, mat.laws, Rock::Matrix, variant);
  return phi_geo[cell] + mat.inv_m() * (pe - p_e0_cell[cell]);
}

// ---------------------------------------------------------------------------
// Interface evaluation: fluxes, damaged-layer storage and all partial
// derivative blocks at given interface pressures.

namespace {

struct IfaceEval {
  double g[2], v[2], acc[2];
  Eigen::Matrix2d dg_dpg, dg_dpk, dg_dpf;
  Eigen::Matrix2d dv_dpg, dv_dpk;
  Eigen::Matrix2d dacc_dpg;
};

IfaceEval eval_interface(const FlowDriver& drv, const TpfaConnectivity::MatFrac& mf, int side,
                         const double pk[2], const double pf[2], const double pg[2],
                         const double sa_old[2]) {
  const RockLaws& laws = drv.mat.laws;
  IfaceEval ev;
  ev.dg_dpg.setZero();
  ev.dg_dpk.setZero();
  ev.dg_dpf.setZero();
  ev.dv_dpg.setZero();
  ev.dv_dpk.setZero();
  ev.dacc_dpg.setZero();
  const double th = mf.t_half[side];
  const double al = mf.area * mf.lambda_f;
  const double cacc = mf.area * drv.mat.d_a * drv.mat.phi_a / drv.dt;
  const double pck = pk[kNw] - pk[kW];
  const double pcg = pg[kNw] - pg[kW];
  const double pcf = pf[kNw] - pf[kW];
  for (int a = 0; a < 2; ++a) {
    const bool wet = (a == kW);
    const bool up_k = pk[a] >= pg[a];
    const double s_up = phase_sat(a, up_k ? pck : pcg, laws, Rock::Matrix);
    const double eta_m = laws.mobility(s_up, Rock::Matrix, wet);
    const double dp = pk[a] - pg[a];
    ev.v[a] = th * eta_m * dp;
    const double s_a = phase_sat(a, pcg, laws, Rock::Damaged);
    const double s_f = phase_sat(a, pcf, laws, Rock::Fracture);
    const double jump = pg[a] - pf[a];
    const bool up_a = jump >= 0.0;
    const double eta_br = up_a ? laws.mobility(s_a, Rock::Damaged, wet)
                               : laws.mobility(s_f, Rock::Fracture, wet);
    const double q = al * eta_br * jump;
    ev.acc[a] = cacc * (s_a - sa_old[a]);
    ev.g[a] = ev.v[a] - q - ev.acc[a];

    for (int b = 0; b < 2; ++b) {
      const double sb = pc_sign(b);
      // matrix half flux
      double dvk = th * (a == b ? eta_m : 0.0);
      double dvg = -th * (a == b ? eta_m : 0.0);
      double deta_dpc =
          laws.mobility_ds(s_up, Rock::Matrix, wet) * phase_sat_dpc(a, up_k ? pck : pcg, laws,
                                                                    Rock::Matrix);
      if (up_k)
        dvk += th * dp * deta_dpc * sb;
      else
        dvg += th * dp * deta_dpc * sb;
      ev.dv_dpk(a, b) = dvk;
      ev.dv_dpg(a, b) = dvg;
      // interface flux
      double dqg = al * (a == b ? eta_br : 0.0);
      double dqf = -al * (a == b ? eta_br : 0.0);
      if (up_a)
        dqg += al * jump * laws.mobility_ds(s_a, Rock::Damaged, wet) *
               phase_sat_dpc(a, pcg, laws, Rock::Damaged) * sb;
      else
        dqf += al * jump * laws.mobility_ds(s_f, Rock::Fracture, wet) *
               phase_sat_dpc(a, pcf, laws, Rock::Fracture) * sb;
      // damaged accumulation
      double dacc = cacc * phase_sat_dpc(a, pcg, laws, Rock::Damaged) * sb;
      ev.dacc_dpg(a, b) = dacc;
      ev.dg_dpg(a, b) = dvg - dqg - dacc;
      ev.dg_dpk(a, b) = dvk;
      ev.dg_dpf(a, b) = -dqf;
    }
    // Degenerate phase: no mobility anywhere and no storage. Pin the trace
    // pressure to the matrix value; the flux is zero regardless.
    if (std::abs(ev.dg_dpg(a, 0)) + std::abs(ev.dg_dpg(a, 1)) == 0.0) {
      ev.g[a] = pg[a] - pk[a];
      ev.v[a] = 0.0;
      ev.acc[a] = cacc * (s_a - sa_old[a]);
      for (int b = 0; b < 2; ++b) {
        ev.dg_dpg(a, b) = (a == b) ? 1.0 : 0.0;
        ev.dg_dpk(a, b) = (a == b) ? -1.0 : 0.0;
        ev.dg_dpf(a, b) = 0.0;
        ev.dv_dpg(a, b) = ev.dv_dpk(a, b) = 0.0;
      }
    }
  }
  return ev;
}

}  // namespace

InterfaceLocal eliminate_interface_pressures(const FlowDriver& drv, int mf_index, int side,
                                             const double p_cell[2], const double p_face[2],
                                             const double guess[2], double tol) {
  const auto& mf = drv.conn->mat_frac[mf_index];
  InterfaceLocal out;
  double pg[2] = {guess[0], guess[1]};
  double sa_old[2];
  {
    const FlowState& old = *drv.old_state;
    double pcg_old =
        old.iface[side][kNw][mf.face] - old.iface[side][kW][mf.face];
    sa_old[kNw] = phase_sat(kNw, pcg_old, drv.mat.laws, Rock::Damaged);
    sa_old[kW] = phase_sat(kW, pcg_old, drv.mat.laws, Rock::Damaged);
  }
  IfaceEval ev = eval_interface(drv, mf, side, p_cell, p_face, pg, sa_old);
  double norm0 = std::max(std::hypot(ev.g[0], ev.g[1]), 1e-300);
  for (int it = 0; it < drv.max_local_iter; ++it) {
    double norm = std::hypot(ev.g[0], ev.g[1]);
    if (norm <= tol * norm0 + 1e-300) {
      out.converged = true;
      out.iterations = it;
      break;
    }
    Eigen::Vector2d rhs(-ev.g[0], -ev.g[1]);
    Eigen::Matrix2d j = ev.dg_dpg;
    double det = j.determinant();
    if (!std::isfinite(det) || det == 0.0) break;
    Eigen::Vector2d dx = j.lu().solve(rhs);
    double step = 1.0;
    for (int bt = 0; bt < 10; ++bt) {
      double trial[2] = {pg[0] + step * dx[0], pg[1] + step * dx[1]};
      IfaceEval trial_ev = eval_interface(drv, mf, side, p_cell, p_face, trial, sa_old);
      if (std::hypot(trial_ev.g[0], trial_ev.g[1]) <= (1.0 - 0.25 * step) * norm || bt == 9) {
        pg[0] = trial[0];
        pg[1] = trial[1];
        ev = trial_ev;
        break;
      }
      step *= 0.5;
    }
  }
  if (!out.converged) {
    double norm = std::hypot(ev.g[0], ev.g[1]);
    out.converged = norm <= tol * norm0 + 1e-300;
    out.iterations = drv.max_local_iter;
  }
  out.pg[0] = pg[0];
  out.pg[1] = pg[1];
  out.v[0] = ev.v[0];
  out.v[1] = ev.v[1];
  out.acc[0] = ev.acc[0];
  out.acc[1] = ev.acc[1];
  if (out.converged) {
    Eigen::Matrix2d jinv = ev.dg_dpg.inverse();
    Eigen::Matrix2d dpg_dpk = -jinv * ev.dg_dpk;
    Eigen::Matrix2d dpg_dpf = -jinv * ev.dg_dpf;
    out.dv_dpk = ev.dv_dpk + ev.dv_dpg * dpg_dpk;
    out.dv_dpf = ev.dv_dpg * dpg_dpf;
    out.dacc_dpk = ev.dacc_dpg * dpg_dpk;
    out.dacc_dpf = ev.dacc_dpg * dpg_dpf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Residual and Jacobian assembly

namespace {

struct TwoPointFlux {
  double f = 0.0;
  double d0[2] = {0, 0};
  double d1[2] = {0, 0};
};

TwoPointFlux two_point(const RockLaws& laws, double t, const double p0[2], const double p1[2],
                       Rock rock, int a) {
  TwoPointFlux r;
  const bool wet = (a == kW);
  const double pc0 = p0[kNw] - p0[kW], pc1 = p1[kNw] - p1[kW];
  const bool up0 = p0[a] >= p1[a];
  const double s_up = phase_sat(a, up0 ? pc0 : pc1, laws, rock);
  const double eta = laws.mobility(s_up, rock, wet);
  const double dp = p0[a] - p1[a];
  r.f = t * eta * dp;
  const double deta_dpc =
      laws.mobility_ds(s_up, rock, wet) * phase_sat_dpc(a, up0 ? pc0 : pc1, laws, rock);
  for (int b = 0; b < 2; ++b) {
    const double sb = pc_sign(b);
    r.d0[b] = t * (a == b ? eta : 0.0) + (up0 ? t * dp * deta_dpc * sb : 0.0);
    r.d1[b] = -t * (a == b ? eta : 0.0) + (!up0 ? t * dp * deta_dpc * sb : 0.0);
  }
  return r;
}

}  // namespace

FlowAssembly assemble_flow_residual(const FlowDriver& drv, FlowState& state, bool with_jacobian) {
  const FracturedMesh& mesh = *drv.mesh;
  const TpfaConnectivity& conn = *drv.conn;
  const RockLaws& laws = drv.mat.laws;
  const FlowState& old = *drv.old_state;
  const int nc = drv.n_cells(), nf = drv.n_faces();
  const int base = 2 * (nc + nf);
  auto cell_row = [&](int c, int a) { return 2 * c + a; };
  auto face_row = [&](int f, int a) { return 2 * nc + 2 * f + a; };

  FlowAssembly out;

  // Pass 1: interface eliminations; collect fallbacks.
  struct IfaceUse {
    bool fallback = false;
    int fallback_slot = -1;
    InterfaceLocal local;
  };
  std::vector<std::array<IfaceUse, 2>> iface_use(conn.mat_frac.size());
  for (std::size_t m = 0; m < conn.mat_frac.size(); ++m) {
    const auto& mf = conn.mat_frac[m];
    for (int side = 0; side < 2; ++side) {
      double pk[2] = {state.p_cell[kNw][mf.cell[side]], state.p_cell[kW][mf.cell[side]]};
      double pf[2] = {state.p_face[kNw][mf.face], state.p_face[kW][mf.face]};
      double guess[2] = {state.iface[side][kNw][mf.face], state.iface[side][kW][mf.face]};
      IfaceUse& use = iface_use[m][side];
      if (state.iface_fallback[side][mf.face]) {
        use.fallback = true;
      } else {
        use.local = eliminate_interface_pressures(drv, (int)m, side, pk, pf, guess);
        if (use.local.converged) {
          state.iface[side][kNw][mf.face] = use.local.pg[kNw];
          state.iface[side][kW][mf.face] = use.local.pg[kW];
        } else {
          use.fallback = true;
          state.iface_fallback[side][mf.face] = 1;
        }
      }
      if (use.fallback) {
        use.fallback_slot = base + 2 * (int)out.fallback_ids.size();
        out.fallback_ids.push_back({(int)m, side});
      }
    }
  }
  const int n_unknowns = base + 2 * (int)out.fallback_ids.size();
  out.residual = Vector::Zero(n_unknowns);
  SparseBuilder builder(n_unknowns, n_unknowns);
  auto add = [&](int i, int j, double v) {
    if (with_jacobian && v != 0.0) builder.add(i, j, v);
  };

  // Accumulation: matrix cells.
  const double inv_m = drv.mat.inv_m();
  for (int c = 0; c < nc; ++c) {
    const double vol = mesh.tri_area[c];
    const double pnw = state.p_cell[kNw][c], pw = state.p_cell[kW][c];
    const double pc = pnw - pw;
    const double s_nw = laws.s_nw(pc, Rock::Matrix);
    const double ds = laws.ds_nw(pc, Rock::Matrix) + 1e-12 / laws.r_matrix;  // Jacobian floor
    const double pe = equivalent_pressure(pnw, pw, laws, Rock::Matrix, drv.variant);
    const double phi_new = drv.phi_geo[c] + inv_m * (pe - drv.p_e0_cell[c]);
    state.phi[c] = phi_new;
    const double pc_old = old.p_cell[kNw][c] - old.p_cell[kW][c];
    const double s_nw_old = laws.s_nw(pc_old, Rock::Matrix);
    double dpe_dp[2];
    if (drv.variant == ModelVariant::Original) {
      dpe_dp[kNw] = s_nw;
      dpe_dp[kW] = 1.0 - s_nw;
    } else {
      dpe_dp[kNw] = s_nw + pc * laws.ds_nw(pc, Rock::Matrix);
      dpe_dp[kW] = 1.0 - s_nw - pc * laws.ds_nw(pc, Rock::Matrix);
    }
    for (int a = 0; a < 2; ++a) {
      const double s = (a == kNw) ? s_nw : 1.0 - s_nw;
      const double s_old = (a == kNw) ? s_nw_old : 1.0 - s_nw_old;
      const double ds_a = (a == kNw) ? ds : -ds;
      double acc, dacc_dp[2];
      if (drv.variant == ModelVariant::Original) {
        acc = vol * (phi_new * s - old.phi[c] * s_old) / drv.dt;
        dacc_dp[kNw] = vol * (inv_m * dpe_dp[kNw] * s + phi_new * ds_a) / drv.dt;
        dacc_dp[kW] = vol * (inv_m * dpe_dp[kW] * s - phi_new * ds_a) / drv.dt;
      } else {
        acc = vol * (drv.mat.phi_m0 * (s - s_old) + s * (phi_new - old.phi[c])) / drv.dt;
        dacc_dp[kNw] = vol * (drv.mat.phi_m0 * ds_a + ds_a * (phi_new - old.phi[c]) +
                              s * inv_m * dpe_dp[kNw]) / drv.dt;
        dacc_dp[kW] = vol * (-drv.mat.phi_m0 * ds_a - ds_a * (phi_new - old.phi[c]) +
                             s * inv_m * dpe_dp[kW]) / drv.dt;
      }
      out.residual[cell_row(c, a)] += acc;
      out.breakdown.accumulation[a] += acc;
      add(cell_row(c, a), cell_row(c, kNw), dacc_dp[kNw]);
      add(cell_row(c, a), cell_row(c, kW), dacc_dp[kW]);
    }
    for (int a = 0; a < 2; ++a)
      if (drv.sources.cell[a].size()) {
        double h = drv.sources.cell[a][c];
        out.residual[cell_row(c, a)] -= h;
        out.breakdown.source[a] += h;
        out.breakdown.source_work[a] += h * state.p_cell[a][c];
      }
  }

  // Accumulation: fracture faces.
  for (int f = 0; f < nf; ++f) {
    const double area = mesh.fracture_faces[f].length;
    const double pc = state.p_face[kNw][f] - state.p_face[kW][f];
    const double s_nw = laws.s_nw(pc, Rock::Fracture);
    const double ds = laws.ds_nw(pc, Rock::Fracture) + 1e-12 / laws.r_fracture;
    const double pc_old = old.p_face[kNw][f] - old.p_face[kW][f];
    const double s_nw_old = laws.s_nw(pc_old, Rock::Fracture);
    state.aperture[f] = drv.aperture[f];
    for (int a = 0; a < 2; ++a) {
      const double s = (a == kNw) ? s_nw : 1.0 - s_nw;
      const double s_old = (a == kNw) ? s_nw_old : 1.0 - s_nw_old;
      const double ds_a = (a == kNw) ? ds : -ds;
      double acc = area * (drv.aperture[f] * s - old.aperture[f] * s_old) / drv.dt;
      out.residual[face_row(f, a)] += acc;
      out.breakdown.accumulation[a] += acc;
      add(face_row(f, a), face_row(f, kNw), area * drv.aperture[f] * ds_a / drv.dt);
      add(face_row(f, a), face_row(f, kW), -area * drv.aperture[f] * ds_a / drv.dt);
      if (drv.sources.face[a].size()) {
        double h = drv.sources.face[a][f];
        out.residual[face_row(f, a)] -= h;
        out.breakdown.source[a] += h;
        out.breakdown.source_work[a] += h * state.p_face[a][f];
      }
    }
  }

  // Matrix-matrix connections.
  for (const auto& cc : conn.cell_cell) {
    double p0[2] = {state.p_cell[kNw][cc.k], state.p_cell[kW][cc.k]};
    double p1[2] = {state.p_cell[kNw][cc.l], state.p_cell[kW][cc.l]};
    for (int a = 0; a < 2; ++a) {
      TwoPointFlux tp = two_point(laws, cc.t, p0, p1, Rock::Matrix, a);
      out.residual[cell_row(cc.k, a)] += tp.f;
      out.residual[cell_row(cc.l, a)] -= tp.f;
      out.breakdown.dissipation_matrix += tp.f * (p0[a] - p1[a]);
      for (int b = 0; b < 2; ++b) {
        add(cell_row(cc.k, a), cell_row(cc.k, b), tp.d0[b]);
        add(cell_row(cc.k, a), cell_row(cc.l, b), tp.d1[b]);
        add(cell_row(cc.l, a), cell_row(cc.k, b), -tp.d0[b]);
        add(cell_row(cc.l, a), cell_row(cc.l, b), -tp.d1[b]);
      }
    }
  }

  // Matrix boundary (Dirichlet by tag; untagged boundaries are no-flow).
  for (const auto& cb : conn.cell_bnd) {
    auto it = drv.bc.matrix_dirichlet.find(cb.tag);
    if (it == drv.bc.matrix_dirichlet.end()) continue;
    double p0[2] = {state.p_cell[kNw][cb.cell], state.p_cell[kW][cb.cell]};
    const double* pd = it->second.p;
    for (int a = 0; a < 2; ++a) {
      TwoPointFlux tp = two_point(laws, cb.t, p0, pd, Rock::Matrix, a);
      out.residual[cell_row(cb.cell, a)] += tp.f;
      out.breakdown.boundary_influx[a] -= tp.f;
      out.breakdown.dissipation_boundary += tp.f * (p0[a] - pd[a]);
      out.breakdown.boundary_work[a] -= tp.f * pd[a];
      for (int b = 0; b < 2; ++b) add(cell_row(cb.cell, a), cell_row(cb.cell, b), tp.d0[b]);
    }
  }

  // Fracture-fracture connections.
  for (const auto& ff : conn.face_face) {
    double p0[2] = {state.p_face[kNw][ff.f0], state.p_face[kW][ff.f0]};
    double p1[2] = {state.p_face[kNw][ff.f1], state.p_face[kW][ff.f1]};
    for (int a = 0; a < 2; ++a) {
      TwoPointFlux tp = two_point(laws, ff.t, p0, p1, Rock::Fracture, a);
      out.residual[face_row(ff.f0, a)] += tp.f;
      out.residual[face_row(ff.f1, a)] -= tp.f;
      out.breakdown.dissipation_fracture += tp.f * (p0[a] - p1[a]);
      for (int b = 0; b < 2; ++b) {
        add(face_row(ff.f0, a), face_row(ff.f0, b), tp.d0[b]);
        add(face_row(ff.f0, a), face_row(ff.f1, b), tp.d1[b]);
        add(face_row(ff.f1, a), face_row(ff.f0, b), -tp.d0[b]);
        add(face_row(ff.f1, a), face_row(ff.f1, b), -tp.d1[b]);
      }
    }
  }

  // Fracture boundary.
  for (const auto& fb : conn.face_bnd) {
    auto it = drv.bc.fracture_dirichlet.find(fb.tag);
    if (it == drv.bc.fracture_dirichlet.end()) continue;
    double p0[2] = {state.p_face[kNw][fb.face], state.p_face[kW][fb.face]};
    const double* pd = it->second.p;
    for (int a = 0; a < 2; ++a) {
      TwoPointFlux tp = two_point(laws, fb.t, p0, pd, Rock::Fracture, a);
      out.residual[face_row(fb.face, a)] += tp.f;
      out.breakdown.boundary_influx[a] -= tp.f;
      out.breakdown.dissipation_boundary += tp.f * (p0[a] - pd[a]);
      out.breakdown.boundary_work[a] -= tp.f * pd[a];
      for (int b = 0; b < 2; ++b) add(face_row(fb.face, a), face_row(fb.face, b), tp.d0[b]);
    }
  }

  // Matrix-fracture interfaces.
  for (std::size_t m = 0; m < conn.mat_frac.size(); ++m) {
    const auto& mf = conn.mat_frac[m];
    for (int side = 0; side < 2; ++side) {
      const IfaceUse& use = iface_use[m][side];
      int cell = mf.cell[side];
      double pk[2] = {state.p_cell[kNw][cell], state.p_cell[kW][cell]};
      double pf[2] = {state.p_face[kNw][mf.face], state.p_face[kW][mf.face]};
      double pg[2] = {state.iface[side][kNw][mf.face], state.iface[side][kW][mf.face]};
      if (!use.fallback) {
        const InterfaceLocal& lo = use.local;
        for (int a = 0; a < 2; ++a) {
          // Matrix loses v; fracture gains v - acc (the damaged layer stores acc).
          out.residual[cell_row(cell, a)] += lo.v[a];
          out.residual[face_row(mf.face, a)] -= lo.v[a] - lo.acc[a];
          out.breakdown.accumulation[a] += lo.acc[a];
          out.breakdown.dissipation_interface +=
              lo.v[a] * (pk[a] - lo.pg[a]) +
              (lo.v[a] - lo.acc[a]) * (lo.pg[a] - pf[a]);
          for (int b = 0; b < 2; ++b) {
            add(cell_row(cell, a), cell_row(cell, b), lo.dv_dpk(a, b));
            add(cell_row(cell, a), face_row(mf.face, b), lo.dv_dpf(a, b));
            add(face_row(mf.face, a), cell_row(cell, b),
                -(lo.dv_dpk(a, b) - lo.dacc_dpk(a, b)));
            add(face_row(mf.face, a), face_row(mf.face, b),
                -(lo.dv_dpf(a, b) - lo.dacc_dpf(a, b)));
          }
        }
      } else {
        // Interface pressures stay in the global system for this face side.
        double sa_old[2];
        double pcg_old = old.iface[side][kNw][mf.face] - old.iface[side][kW][mf.face];
        sa_old[kNw] = phase_sat(kNw, pcg_old, laws, Rock::Damaged);
        sa_old[kW] = phase_sat(kW, pcg_old, laws, Rock::Damaged);
        IfaceEval ev = eval_interface(drv, mf, side, pk, pf, pg, sa_old);
        int slot = use.fallback_slot;
        for (int a = 0; a < 2; ++a) {
          out.residual[cell_row(cell, a)] += ev.v[a];
          out.residual[face_row(mf.face, a)] -= ev.v[a] - ev.acc[a];
          out.residual[slot + a] = ev.g[a];
          out.breakdown.accumulation[a] += ev.acc[a];
          out.breakdown.dissipation_interface +=
              ev.v[a] * (pk[a] - pg[a]) + (ev.v[a] - ev.acc[a]) * (pg[a] - pf[a]);
          for (int b = 0; b < 2; ++b) {
            add(cell_row(cell, a), cell_row(cell, b), ev.dv_dpk(a, b));
            add(cell_row(cell, a), slot + b, ev.dv_dpg(a, b));
            add(face_row(mf.face, a), cell_row(cell, b), -ev.dv_dpk(a, b));
            add(face_row(mf.face, a), slot + b, -(ev.dv_dpg(a, b) - ev.dacc_dpg(a, b)));
            add(slot + a, slot + b, ev.dg_dpg(a, b));
            add(slot + a, cell_row(cell, b), ev.dg_dpk(a, b));
            add(slot + a, face_row(mf.face, b), ev.dg_dpf(a, b));
          }
        }
      }
    }
  }

  if (with_jacobian) out.jacobian = builder.compress();
  return out;
}

// ---------------------------------------------------------------------------
// Newton

FlowStats flow_newton_solve(const FlowDriver& drv, FlowState& state, double rtol, double vtol,
                            int max_iter) {
  FlowStats stats;
  const int nc = drv.n_cells(), nf = drv.n_faces();
  FlowAssembly as = assemble_flow_residual(drv, state, true);
  double denom = std::max(as.residual.norm(), 1e-300);
  for (int it = 0; it <= max_iter; ++it) {
    double rel = as.residual.norm() / denom;
    if (rel <= rtol) {
      stats.converged = true;
      stats.iterations = it;
      stats.final_residual = rel;
      stats.breakdown = as.breakdown;
      return stats;
    }
    if (it == max_iter) break;

    // Row equilibration before the Krylov solve.
    SparseMatrix j = as.jacobian;
    Vector rhs = -as.residual;
    for (int i = 0; i < j.rows; ++i) {
      double m = 0.0;
      for (int k = j.row_ptr[i]; k < j.row_ptr[i + 1]; ++k) m = std::max(m, std::abs(j.vals[k]));
      double s = m > 0 ? 1.0 / m : 1.0;
      for (int k = j.row_ptr[i]; k < j.row_ptr[i + 1]; ++k) j.vals[k] *= s;
      rhs[i] *= s;
    }
    KrylovConfig cfg;
    cfg.restart = 30;
    cfg.max_iter = 600;
    cfg.rel_tol = 1e-9;
    Vector dx;
    KrylovResult kr = gmres_solve(j, rhs, cfg);
    if (kr.converged) {
      dx = kr.x;
    } else {
      try {
        dx = lu_solve(j, rhs);
      } catch (const SingularMatrixError& e) {
        stats.failure = std::string("flow Jacobian singular: ") + e.what();
        stats.iterations = it;
        stats.final_residual = rel;
        stats.breakdown = as.breakdown;
        return stats;
      }
    }

    auto apply = [&](double step) {
      for (int c = 0; c < nc; ++c) {
        state.p_cell[kNw][c] += step * dx[2 * c];
        state.p_cell[kW][c] += step * dx[2 * c + 1];
      }
      for (int f = 0; f < nf; ++f) {
        state.p_face[kNw][f] += step * dx[2 * nc + 2 * f];
        state.p_face[kW][f] += step * dx[2 * nc + 2 * f + 1];
      }
      for (std::size_t q = 0; q < as.fallback_ids.size(); ++q) {
        auto [m, side] = as.fallback_ids[q];
        int face = drv.conn->mat_frac[m].face;
        int slot = 2 * (nc + nf) + 2 * (int)q;
        state.iface[side][kNw][face] += step * dx[slot];
        state.iface[side][kW][face] += step * dx[slot + 1];
      }
    };

    double old_norm = as.residual.norm();
    double step = 1.0;
    apply(step);
    FlowAssembly trial = assemble_flow_residual(drv, state, true);
    for (int bt = 0; bt < 3 && trial.residual.norm() > old_norm; ++bt) {
      apply(-step / 2);
      step /= 2;
      trial = assemble_flow_residual(drv, state, true);
    }
    as = std::move(trial);

    // Maximum normalized variation of the primary unknowns (pressures / 1 MPa).
    double max_var = 0.0;
    for (int i = 0; i < dx.size(); ++i) max_var = std::max(max_var, std::abs(step * dx[i]) / 1e6);
    if (max_var <= vtol) {
      stats.converged = true;
      stats.iterations = it + 1;
      stats.final_residual = as.residual.norm() / denom;
      stats.breakdown = as.breakdown;
      return stats;
    }
  }
  stats.iterations = max_iter;
  stats.final_residual = as.residual.norm() / denom;
  stats.breakdown = as.breakdown;
  stats.failure = "flow Newton did not converge within max iterations";
  return stats;
}

double adaptive_timestep(double dt_prev, bool success, const TimestepPolicy& policy) {
  if (success) return std::min(policy.growth * dt_prev, policy.dt_max);
  return 0.5 * dt_prev;
}

}  // namespace porofrac
