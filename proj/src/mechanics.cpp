#include "porofrac/mechanics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace porofrac {

const char* to_string(FaceState s) {
  switch (s) {
    case FaceState::Open: return "open";
    case FaceState::Stick: return "stick";
    case FaceState::Slip: return "slip";
  }
  return "?";
}

ContactSystem ContactSystem::zeros(const FracturedMesh& mesh, double c) {
  ContactSystem s;
  s.u = Vector::Zero(2 * mesh.n_disp_nodes);
  s.u_prev = s.u;
  s.lambda_n = Vector::Zero(mesh.n_fracture_faces());
  s.lambda_t = Vector::Zero(mesh.n_fracture_faces());
  s.state.assign(mesh.n_fracture_faces(), FaceState::Open);
  s.c = c;
  return s;
}

void MechScenario::fix_boundary(const FracturedMesh& mesh, int tag, bool fix_x, bool fix_y,
                                Vec2 value) {
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    const MeshEdge& me = mesh.edges[e];
    if (me.boundary_tag != tag || me.n_tris != 1) continue;
    int t = me.tri[0];
    std::vector<int> nodes;
    for (int k = 0; k < 3; ++k) {
      if (mesh.tris[t][k] == me.v0 || mesh.tris[t][k] == me.v1)
        nodes.push_back(mesh.tri_corner_node[t][k]);
      if (mesh.tri_edges[t][k] == (int)e) nodes.push_back(mesh.tri_midside_node[t][k]);
    }
    // All copies of the boundary vertices are constrained alike.
    for (int v : {me.v0, me.v1})
      for (int c = mesh.vertex_copy_offset[v]; c < mesh.vertex_copy_offset[v + 1]; ++c)
        nodes.push_back(c);
    for (int n : nodes) {
      if (fix_x) dirichlet.push_back({2 * n, value.x()});
      if (fix_y) dirichlet.push_back({2 * n + 1, value.y()});
    }
  }
}

void MechScenario::pin_vertex_near(const FracturedMesh& mesh, const Vec2& p, bool fix_x,
                                   bool fix_y, Vec2 value) {
  int best = 0;
  double bd = 1e300;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    double d = (mesh.vertices[v] - p).squaredNorm();
    if (d < bd) {
      bd = d;
      best = (int)v;
    }
  }
  for (int c = mesh.vertex_copy_offset[best]; c < mesh.vertex_copy_offset[best + 1]; ++c) {
    if (fix_x) dirichlet.push_back({2 * c, value.x()});
    if (fix_y) dirichlet.push_back({2 * c + 1, value.y()});
  }
}

void MechScenario::set_uniform_friction(const FracturedMesh& mesh, double f) {
  friction.assign(mesh.n_fracture_faces(), f);
}

Vec2 FaceJumpOperator::apply(const Vector& u) const {
  Vec2 j = Vec2::Zero();
  for (int a = 0; a < 2; ++a)
    for (const auto& [dof, w] : comp[a]) j[a] += w * u[dof];
  return j;
}

// ---------------------------------------------------------------------------
// P2 element machinery

namespace {

struct P2Element {
  std::array<int, 6> nodes;       // c0 c1 c2 m0 m1 m2
  std::array<Vec2, 6> grad[3];    // gradients at the 3 quadrature points
  std::array<double, 6> val[3];   // values at the 3 quadrature points
  double wq;                      // quadrature weight (area/3)
};

P2Element p2_element(const FracturedMesh& mesh, int t) {
  P2Element el;
  for (int k = 0; k < 3; ++k) {
    el.nodes[k] = mesh.tri_corner_node[t][k];
    el.nodes[3 + k] = mesh.tri_midside_node[t][k];
  }
  const Vec2 p[3] = {mesh.vertices[mesh.tris[t][0]], mesh.vertices[mesh.tris[t][1]],
                     mesh.vertices[mesh.tris[t][2]]};
  double a2 = 2.0 * mesh.tri_area[t];
  Vec2 gl[3];
  for (int i = 0; i < 3; ++i) {
    Vec2 d = p[(i + 2) % 3] - p[(i + 1) % 3];
    gl[i] = Vec2(-d.y(), d.x()) / a2;
  }
  // Edge midpoint rule, degree 2: barycentric points with two 1/2 entries.
  const double bq[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
  el.wq = mesh.tri_area[t] / 3.0;
  for (int q = 0; q < 3; ++q) {
    const double* l = bq[q];
    for (int i = 0; i < 3; ++i) {
      el.val[q][i] = l[i] * (2.0 * l[i] - 1.0);
      el.grad[q][i] = (4.0 * l[i] - 1.0) * gl[i];
    }
    for (int k = 0; k < 3; ++k) {
      int i = k, j = (k + 1) % 3;
      el.val[q][3 + k] = 4.0 * l[i] * l[j];
      el.grad[q][3 + k] = 4.0 * (l[j] * gl[i] + l[i] * gl[j]);
    }
  }
  return el;
}

constexpr double kSimpsonEnd = 1.0 / 6.0;
constexpr double kSimpsonMid = 4.0 / 6.0;

}  // namespace

// ---------------------------------------------------------------------------
// Assembly

MechSystem assemble_elasticity(const FracturedMesh& mesh, const MechScenario& scenario) {
  if (scenario.young <= 0) throw std::invalid_argument("E must be positive");
  if (scenario.poisson <= -1.0 || scenario.poisson >= 0.5)
    throw std::invalid_argument("Poisson ratio out of (-1, 1/2)");
  MechSystem sys;
  sys.n_dofs = 2 * mesh.n_disp_nodes;
  sys.is_dirichlet.assign(sys.n_dofs, 0);
  Vector dval = Vector::Zero(sys.n_dofs);
  for (const auto& [dof, v] : scenario.dirichlet) {
    sys.is_dirichlet[dof] = 1;
    dval[dof] = v;
  }
  sys.row_scale = scenario.young;
  const double mu = scenario.young / (2.0 * (1.0 + scenario.poisson));
  const double lam = scenario.young * scenario.poisson /
                     ((1.0 + scenario.poisson) * (1.0 - 2.0 * scenario.poisson));

  SparseBuilder builder(sys.n_dofs, sys.n_dofs);
  sys.rhs = Vector::Zero(sys.n_dofs);

  for (int t = 0; t < mesh.n_cells(); ++t) {
    P2Element el = p2_element(mesh, t);
    double pe = scenario.p_e_cell.empty() ? 0.0 : scenario.p_e_cell[t];
    for (int q = 0; q < 3; ++q) {
      for (int i = 0; i < 6; ++i) {
        const Vec2& gi = el.grad[q][i];
        for (int a = 0; a < 2; ++a) {
          int row = 2 * el.nodes[i] + a;
          if (!sys.is_dirichlet[row]) {
            // Body force, Biot pressure and pre-stress contributions.
            sys.rhs[row] += el.wq * el.val[q][i] * scenario.body_force[a];
            sys.rhs[row] += el.wq * scenario.biot_b * pe * gi[a];
            sys.rhs[row] -= el.wq * (scenario.pre_stress(a, 0) * gi[0] +
                                     scenario.pre_stress(a, 1) * gi[1]);
            for (int j = 0; j < 6; ++j) {
              const Vec2& gj = el.grad[q][j];
              for (int b = 0; b < 2; ++b) {
                double k = mu * ((a == b ? gi.dot(gj) : 0.0) + gi[b] * gj[a]) +
                           lam * gi[a] * gj[b];
                builder.add(row, 2 * el.nodes[j] + b, el.wq * k);
              }
            }
          }
        }
      }
    }
  }

  // Neumann tractions, Simpson rule on the P2 trace.
  for (const auto& [eid, trac] : scenario.neumann_edges) {
    const MeshEdge& me = mesh.edges[eid];
    if (me.n_tris != 1) throw std::invalid_argument("Neumann edge is not a boundary edge");
    int t = me.tri[0];
    int n0 = -1, n1 = -1, nm = -1;
    for (int k = 0; k < 3; ++k) {
      if (mesh.tris[t][k] == me.v0) n0 = mesh.tri_corner_node[t][k];
      if (mesh.tris[t][k] == me.v1) n1 = mesh.tri_corner_node[t][k];
      if (mesh.tri_edges[t][k] == eid) nm = mesh.tri_midside_node[t][k];
    }
    double len = (mesh.vertices[me.v1] - mesh.vertices[me.v0]).norm();
    for (int a = 0; a < 2; ++a) {
      if (!sys.is_dirichlet[2 * n0 + a]) sys.rhs[2 * n0 + a] += len * kSimpsonEnd * trac[a];
      if (!sys.is_dirichlet[2 * n1 + a]) sys.rhs[2 * n1 + a] += len * kSimpsonEnd * trac[a];
      if (!sys.is_dirichlet[2 * nm + a]) sys.rhs[2 * nm + a] += len * kSimpsonMid * trac[a];
    }
  }

  // Jump operators and the fracture equivalent-pressure load.
  sys.jump_ops.resize(mesh.n_fracture_faces());
  for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
    const FractureFace& face = mesh.fracture_faces[f];
    FaceJumpOperator& op = sys.jump_ops[f];
    for (int side = 0; side < 2; ++side) {
      double sgn = side == 0 ? 1.0 : -1.0;
      auto nodes = mesh.face_trace_nodes(f, side == 0 ? +1 : -1);
      const double w[3] = {kSimpsonEnd, kSimpsonEnd, kSimpsonMid};
      for (int k = 0; k < 3; ++k)
        for (int a = 0; a < 2; ++a) op.comp[a].push_back({2 * nodes[k] + a, sgn * w[k]});
    }
    double pef = scenario.p_e_face.empty() ? 0.0 : scenario.p_e_face[f];
    if (pef != 0.0) {
      for (int a = 0; a < 2; ++a)
        for (const auto& [dof, w] : op.comp[a])
          if (!sys.is_dirichlet[dof]) sys.rhs[dof] -= pef * face.length * w * face.n_plus[a];
    }
  }

  // Dirichlet rows as scaled identity.
  for (int d = 0; d < sys.n_dofs; ++d)
    if (sys.is_dirichlet[d]) {
      builder.add(d, d, sys.row_scale);
      sys.rhs[d] = sys.row_scale * dval[d];
    }
  sys.stiffness = builder.compress();

  // Fill order for the saddle system: displacement dofs at node positions,
  // multipliers at face midpoints.
  std::vector<Vec2> pos(sys.n_dofs + 2 * mesh.n_fracture_faces());
  for (int n = 0; n < mesh.n_disp_nodes; ++n) pos[2 * n] = pos[2 * n + 1] = mesh.node_pos[n];
  for (int f = 0; f < mesh.n_fracture_faces(); ++f)
    pos[sys.n_dofs + 2 * f] = pos[sys.n_dofs + 2 * f + 1] = mesh.fracture_faces[f].midpoint;
  sys.lu_order = nested_dissection_order(pos);
  return sys;
}

JumpNT jump_average(const FracturedMesh& mesh, const MechSystem& sys, const Vector& u, int face) {
  Vec2 j = sys.jump_ops[face].apply(u);
  const FractureFace& f = mesh.fracture_faces[face];
  return {j.dot(f.n_plus), j.dot(f.tangent)};
}

// ---------------------------------------------------------------------------
// Complementarity functions and classification

Complementarity complementarity_residual(double lambda_n, double lambda_t, double jump_n,
                                         double djump_t, double c, double friction) {
  Complementarity r;
  r.b = lambda_n + c * jump_n;
  r.a = lambda_t + c * djump_t;
  r.c_n = lambda_n - std::max(0.0, r.b);
  r.c_t = lambda_t * std::max(friction * r.b, std::abs(r.a)) -
          r.a * std::max(0.0, friction * r.b);
  return r;
}

FaceState classify_face(double b, double a, double friction) {
  if (b <= 0.0) return FaceState::Open;
  if (std::abs(a) < friction * b) return FaceState::Stick;
  return FaceState::Slip;
}

FaceSets classify_faces(const FracturedMesh& mesh, const MechSystem& sys,
                        const ContactSystem& state, const std::vector<double>& friction) {
  FaceSets sets;
  for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
    JumpNT jc = jump_average(mesh, sys, state.u, f);
    JumpNT jp = jump_average(mesh, sys, state.u_prev, f);
    auto comp = complementarity_residual(state.lambda_n[f], state.lambda_t[f], jc.n,
                                         jc.t - jp.t, state.c, friction[f]);
    switch (classify_face(comp.b, comp.a, friction[f])) {
      case FaceState::Open: sets.open.push_back(f); break;
      case FaceState::Stick: sets.stick.push_back(f); break;
      case FaceState::Slip: sets.slip.push_back(f); break;
    }
  }
  return sets;
}

// ---------------------------------------------------------------------------
// Shared solver scaffolding

namespace {

struct SolveWorkspace {
  const FracturedMesh& mesh;
  const MechScenario& scenario;
  const MechSystem& sys;
  int n_faces;
  int n_total;
  double lam_scale;  // multiplier unknowns stored as lambda/lam_scale
  SparseMatrix momentum_csr;  // constant across iterations: stiffness + B^T columns

  SolveWorkspace(const FracturedMesh& m, const MechScenario& sc, const MechSystem& s)
      : mesh(m), scenario(sc), sys(s) {
    n_faces = m.n_fracture_faces();
    n_total = s.n_dofs + 2 * n_faces;
    lam_scale = sc.young;
    SparseBuilder b(n_total, n_total);
    const SparseMatrix& a = sys.stiffness;
    for (int i = 0; i < a.rows; ++i)
      for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
        b.add(i, a.col_idx[k], a.vals[k]);
    for (int f = 0; f < n_faces; ++f) {
      const FractureFace& face = mesh.fracture_faces[f];
      const FaceJumpOperator& op = sys.jump_ops[f];
      for (int c = 0; c < 2; ++c)
        for (const auto& [dof, w] : op.comp[c]) {
          if (sys.is_dirichlet[dof]) continue;
          b.add(dof, row_cn(f), face.length * w * face.n_plus[c] * lam_scale);
          b.add(dof, row_ct(f), face.length * w * face.tangent[c] * lam_scale);
        }
    }
    momentum_csr = b.compress();
  }
  int row_cn(int f) const { return sys.n_dofs + 2 * f; }
  int row_ct(int f) const { return sys.n_dofs + 2 * f + 1; }

  /// Momentum rows copied from the cached CSR, contact rows appended.
  SparseMatrix compose(const std::vector<std::vector<std::pair<int, double>>>& contact_rows)
      const {
    SparseMatrix m;
    m.rows = m.cols = n_total;
    std::size_t extra = 0;
    for (const auto& row : contact_rows) extra += row.size();
    m.row_ptr.assign(n_total + 1, 0);
    m.col_idx.reserve(momentum_csr.vals.size() + extra);
    m.vals.reserve(momentum_csr.vals.size() + extra);
    std::vector<std::pair<int, double>> tmp;
    for (int i = 0; i < n_total; ++i) {
      if (i < sys.n_dofs) {
        for (int k = momentum_csr.row_ptr[i]; k < momentum_csr.row_ptr[i + 1]; ++k) {
          m.col_idx.push_back(momentum_csr.col_idx[k]);
          m.vals.push_back(momentum_csr.vals[k]);
        }
      } else {
        tmp.assign(contact_rows[i - sys.n_dofs].begin(), contact_rows[i - sys.n_dofs].end());
        std::sort(tmp.begin(), tmp.end());
        for (std::size_t k = 0; k < tmp.size(); ++k) {
          if (k > 0 && tmp[k].first == tmp[k - 1].first)
            m.vals.back() += tmp[k].second;
          else {
            m.col_idx.push_back(tmp[k].first);
            m.vals.push_back(tmp[k].second);
          }
        }
      }
      m.row_ptr[i + 1] = (int)m.col_idx.size();
    }
    return m;
  }

  /// Momentum residual A u + B^T lambda − rhs (lambda in Pa).
  Vector momentum_residual(const ContactSystem& st) const {
    Vector r = sys.stiffness.multiply(st.u) - sys.rhs;
    for (int f = 0; f < n_faces; ++f) {
      const FractureFace& face = mesh.fracture_faces[f];
      const FaceJumpOperator& op = sys.jump_ops[f];
      for (int c = 0; c < 2; ++c)
        for (const auto& [dof, w] : op.comp[c]) {
          if (sys.is_dirichlet[dof]) continue;
          r[dof] += face.length * w *
                    (face.n_plus[c] * st.lambda_n[f] + face.tangent[c] * st.lambda_t[f]);
        }
    }
    return r;
  }

  /// Full scaled residual: momentum rows plus (C_n, C_t)/c.
  Vector true_residual(const ContactSystem& st, std::vector<Complementarity>* comps) const {
    Vector r = Vector::Zero(n_total);
    r.head(sys.n_dofs) = momentum_residual(st);
    for (int f = 0; f < n_faces; ++f) {
      JumpNT jc = jump_average(mesh, sys, st.u, f);
      JumpNT jp = jump_average(mesh, sys, st.u_prev, f);
      auto comp = complementarity_residual(st.lambda_n[f], st.lambda_t[f], jc.n, jc.t - jp.t,
                                           st.c, scenario.friction[f]);
      r[row_cn(f)] = comp.c_n / st.c;
      r[row_ct(f)] = comp.c_t / st.c;
      if (comps) (*comps)[f] = comp;
    }
    return r;
  }

  mutable std::vector<int> cached_order;

  Vector solve_equilibrated(SparseMatrix a, Vector rhs) const {
    // Row then column equilibration by max-abs.
    Vector rs = Vector::Ones(n_total), cs = Vector::Ones(n_total);
    for (int i = 0; i < a.rows; ++i) {
      double m = 0.0;
      for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) m = std::max(m, std::abs(a.vals[k]));
      rs[i] = m > 0 ? 1.0 / m : 1.0;
      for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) a.vals[k] *= rs[i];
    }
    std::vector<double> cmax(n_total, 0.0);
    for (int i = 0; i < a.rows; ++i)
      for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
        cmax[a.col_idx[k]] = std::max(cmax[a.col_idx[k]], std::abs(a.vals[k]));
    for (int j = 0; j < n_total; ++j) cs[j] = cmax[j] > 0 ? 1.0 / cmax[j] : 1.0;
    for (int i = 0; i < a.rows; ++i)
      for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) a.vals[k] *= cs[a.col_idx[k]];
    for (int i = 0; i < n_total; ++i) rhs[i] *= rs[i];
    if (cached_order.empty()) {
      std::vector<Vec2> pos(n_total);
      for (int n = 0; n < mesh.n_disp_nodes; ++n) pos[2 * n] = pos[2 * n + 1] = mesh.node_pos[n];
      for (int f = 0; f < n_faces; ++f)
        pos[row_cn(f)] = pos[row_ct(f)] = mesh.fracture_faces[f].midpoint;
      cached_order = nested_dissection_order(pos, &a);
    }
    SparseLU lu;
    lu.factor(a, cached_order);
    Vector x = lu.solve(rhs);
    for (int j = 0; j < n_total; ++j) x[j] *= cs[j];
    return x;
  }

  void unpack(const Vector& x, ContactSystem& st) const {
    st.u = x.head(sys.n_dofs);
    for (int f = 0; f < n_faces; ++f) {
      st.lambda_n[f] = lam_scale * x[row_cn(f)];
      st.lambda_t[f] = lam_scale * x[row_ct(f)];
    }
  }

  void set_states(ContactSystem& st) const {
    for (int f = 0; f < n_faces; ++f) {
      JumpNT jc = jump_average(mesh, sys, st.u, f);
      JumpNT jp = jump_average(mesh, sys, st.u_prev, f);
      auto comp = complementarity_residual(st.lambda_n[f], st.lambda_t[f], jc.n, jc.t - jp.t,
                                           st.c, scenario.friction[f]);
      st.state[f] = classify_face(comp.b, comp.a, scenario.friction[f]);
    }
  }
};

double reference_length(const FracturedMesh& mesh) {
  double len = 0.0;
  for (const auto& f : mesh.fracture_faces) len = std::max(len, f.length);
  return len > 0 ? len : 1.0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Regularized non-smooth Newton

ContactStats ns_newton_solve(const FracturedMesh& mesh, const MechScenario& scenario,
                             ContactSystem& state, double tol, int max_iter) {
  MechSystem sys = assemble_elasticity(mesh, scenario);
  SolveWorkspace ws(mesh, scenario, sys);
  ContactStats stats;
  const double eps_reg = 1e-10 * std::max(1.0, state.c * reference_length(mesh));

  std::vector<Complementarity> comps(ws.n_faces);
  Vector r = ws.true_residual(state, &comps);
  double denom = std::max({r.norm(), sys.rhs.norm(), 1e-300});
  for (int it = 0; it < max_iter; ++it) {
    double rel = r.norm() / denom;
    {
      FaceSets sets = classify_faces(mesh, sys, state, scenario.friction);
      stats.history.push_back({it, rel, (int)sets.open.size(), (int)sets.stick.size(),
                               (int)sets.slip.size()});
    }
    if (rel <= tol) {
      stats.converged = true;
      stats.iterations = it;
      stats.residual = rel;
      ws.set_states(state);
      return stats;
    }

    std::vector<std::vector<std::pair<int, double>>> contact_rows(2 * ws.n_faces);
    Vector newton_rhs = Vector::Zero(ws.n_total);
    newton_rhs.head(sys.n_dofs) = -r.head(sys.n_dofs);
    const double c = state.c;
    const double sl = ws.lam_scale;
    for (int f = 0; f < ws.n_faces; ++f) {
      const Complementarity& cp = comps[f];
      const double F = scenario.friction[f];
      const FaceJumpOperator& op = sys.jump_ops[f];
      const FractureFace& face = mesh.fracture_faces[f];
      int rn = ws.row_cn(f), rt = ws.row_ct(f);
      auto builder_add = [&](int row, int col, double v) {
        contact_rows[row - sys.n_dofs].push_back({col, v});
      };
      auto add_jump_row = [&](int row, const Vec2& dir, double coeff) {
        for (int comp = 0; comp < 2; ++comp)
          for (const auto& [dof, w] : op.comp[comp])
            builder_add(row, dof, coeff * w * dir[comp]);
      };
      // Rows are the complementarity functions equilibrated by 1/c (open,
      // normal) resp. 1/(c max(Fb,|a|)) (tangential); on the slip branch the
      // direction a/|a| is regularized to a/max(|a|, eps). On each branch the
      // equilibrated function has the same zeros as (C_n, C_t).
      FaceState st = classify_face(cp.b, cp.a, F);
      if (st == FaceState::Open) {
        builder_add(rn, rn, sl / c);
        newton_rhs[rn] = -state.lambda_n[f] / c;
        builder_add(rt, rt, sl / c);
        newton_rhs[rt] = -state.lambda_t[f] / c;
      } else if (st == FaceState::Stick) {
        // C_n/c = -jump_n ; C_t/(c F b) = -(jump_t - jump_t_prev)
        add_jump_row(rn, face.n_plus, -1.0);
        newton_rhs[rn] = -r[rn];
        JumpNT jc = jump_average(mesh, sys, state.u, f);
        JumpNT jp = jump_average(mesh, sys, state.u_prev, f);
        add_jump_row(rt, face.tangent, -1.0);
        newton_rhs[rt] = jc.t - jp.t;
      } else {
        add_jump_row(rn, face.n_plus, -1.0);
        newton_rhs[rn] = -r[rn];
        // C_t/(c |a|) = (lambda_t - shat F b)/c with the frozen regularized
        // direction shat.
        double shat = cp.a / std::max(std::abs(cp.a), eps_reg);
        builder_add(rt, rt, sl / c);
        builder_add(rt, rn, -shat * F / c * sl);
        add_jump_row(rt, face.n_plus, -shat * F);
        newton_rhs[rt] = -(state.lambda_t[f] - shat * F * cp.b) / c;
      }
    }

    Vector dx;
    try {
      dx = ws.solve_equilibrated(ws.compose(contact_rows), newton_rhs);
    } catch (const SingularMatrixError& e) {
      stats.failure = std::string("Jacobian factorization failed: ") + e.what();
      stats.iterations = it + 1;
      stats.residual = rel;
      return stats;
    }
    state.u += dx.head(sys.n_dofs);
    for (int f = 0; f < ws.n_faces; ++f) {
      state.lambda_n[f] += ws.lam_scale * dx[ws.row_cn(f)];
      state.lambda_t[f] += ws.lam_scale * dx[ws.row_ct(f)];
    }
    r = ws.true_residual(state, &comps);
  }
  stats.iterations = max_iter;
  stats.residual = r.norm() / denom;
  stats.failure = "non-convergence after max iterations";
  ws.set_states(state);
  return stats;
}

// ---------------------------------------------------------------------------
// Active set

ContactStats active_set_solve(const FracturedMesh& mesh, const MechScenario& scenario,
                              ContactSystem& state, double tol, int max_iter) {
  MechSystem sys = assemble_elasticity(mesh, scenario);
  SolveWorkspace ws(mesh, scenario, sys);
  ContactStats stats;
  const double eps_reg = 1e-10 * std::max(1.0, state.c * reference_length(mesh));

  std::vector<Complementarity> comps(ws.n_faces);
  Vector r = ws.true_residual(state, &comps);
  double denom = std::max({r.norm(), sys.rhs.norm(), 1e-300});
  std::vector<FaceState> prev_partition(ws.n_faces, FaceState::Open);
  bool have_partition = false;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<FaceState> partition(ws.n_faces);
    for (int f = 0; f < ws.n_faces; ++f)
      partition[f] = classify_face(comps[f].b, comps[f].a, scenario.friction[f]);
    double rel = r.norm() / denom;
    {
      int no = 0, ns = 0, na = 0;
      for (auto s : partition) (s == FaceState::Open ? no : s == FaceState::Stick ? ns : na)++;
      stats.history.push_back({it, rel, no, ns, na});
    }
    if (rel <= tol && (have_partition && partition == prev_partition)) {
      stats.converged = true;
      stats.iterations = it;
      stats.residual = rel;
      ws.set_states(state);
      return stats;
    }
    if (rel <= tol && !have_partition) {
      // Initial state already solves the problem: one classification pass.
      stats.converged = true;
      stats.iterations = 0;
      stats.residual = rel;
      ws.set_states(state);
      return stats;
    }
    prev_partition = partition;
    have_partition = true;

    std::vector<std::vector<std::pair<int, double>>> contact_rows(2 * ws.n_faces);
    Vector rhs = Vector::Zero(ws.n_total);
    rhs.head(sys.n_dofs) = sys.rhs;
    const double sl = ws.lam_scale;
    for (int f = 0; f < ws.n_faces; ++f) {
      const FractureFace& face = mesh.fracture_faces[f];
      const FaceJumpOperator& op = sys.jump_ops[f];
      int rn = ws.row_cn(f), rt = ws.row_ct(f);
      auto builder_add = [&](int row, int col, double v) {
        contact_rows[row - sys.n_dofs].push_back({col, v});
      };
      auto add_jump_row = [&](int row, const Vec2& dir, double coeff) {
        for (int comp = 0; comp < 2; ++comp)
          for (const auto& [dof, w] : op.comp[comp])
            builder_add(row, dof, coeff * w * dir[comp]);
      };
      if (partition[f] == FaceState::Open) {
        builder_add(rn, rn, sl / state.c);
        builder_add(rt, rt, sl / state.c);
      } else if (partition[f] == FaceState::Stick) {
        add_jump_row(rn, face.n_plus, 1.0);
        add_jump_row(rt, face.tangent, 1.0);
        JumpNT jp = jump_average(mesh, sys, state.u_prev, f);
        rhs[rt] = jp.t;
      } else {
        add_jump_row(rn, face.n_plus, 1.0);
        double w_dir = comps[f].a / std::max(std::abs(comps[f].a), eps_reg);
        if (w_dir == 0.0) w_dir = 1.0;
        builder_add(rt, rt, sl / state.c);
        builder_add(rt, rn, -scenario.friction[f] * w_dir * sl / state.c);
      }
    }
    Vector x;
    try {
      x = ws.solve_equilibrated(ws.compose(contact_rows), rhs);
    } catch (const SingularMatrixError& e) {
      stats.failure = std::string("active-set factorization failed: ") + e.what();
      stats.iterations = it + 1;
      stats.residual = rel;
      return stats;
    }
    ws.unpack(x, state);
    r = ws.true_residual(state, &comps);
  }
  stats.iterations = max_iter;
  stats.residual = r.norm() / denom;
  stats.failure = "active set cycling beyond max iterations";
  ws.set_states(state);
  return stats;
}

// ---------------------------------------------------------------------------
// Local conditions, reconstruction, output

LocalConditionsReport check_local_conditions(const FracturedMesh& mesh, const MechSystem& sys,
                                             const ContactSystem& state,
                                             const std::vector<double>& friction, double tol) {
  LocalConditionsReport rep;
  double lam_scale = 1.0, jump_scale = 1e-12;
  for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
    lam_scale = std::max({lam_scale, std::abs(state.lambda_n[f]), std::abs(state.lambda_t[f])});
    JumpNT jc = jump_average(mesh, sys, state.u, f);
    jump_scale = std::max({jump_scale, std::abs(jc.n), std::abs(jc.t)});
  }
  for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
    JumpNT jc = jump_average(mesh, sys, state.u, f);
    JumpNT jp = jump_average(mesh, sys, state.u_prev, f);
    double djt = jc.t - jp.t;
    double v = 0.0;
    v = std::max(v, -state.lambda_n[f] / lam_scale);                      // lambda_n >= 0
    v = std::max(v, jc.n / jump_scale);                                   // jump_n <= 0
    v = std::max(v, std::abs(state.lambda_n[f] * jc.n) / (lam_scale * jump_scale));
    v = std::max(v, (std::abs(state.lambda_t[f]) - friction[f] * state.lambda_n[f]) / lam_scale);
    v = std::max(v, std::abs(djt * state.lambda_t[f] -
                             friction[f] * state.lambda_n[f] * std::abs(djt)) /
                        (lam_scale * jump_scale));
    if (v > tol) {
      rep.ok = false;
      rep.violating_faces.push_back(f);
    }
    rep.worst = std::max(rep.worst, v);
  }
  return rep;
}

std::vector<double> reconstruct_multiplier_p2(const FracturedMesh& mesh, int fracture,
                                              const std::vector<double>& face_values) {
  const auto& faces = mesh.fracture_faces_of[fracture];
  int nf = (int)faces.size();
  std::vector<double> nodal(2 * nf + 1, 0.0);
  std::vector<double> weight(2 * nf + 1, 0.0);
  for (int i = 0; i < nf; ++i) {
    double len = mesh.fracture_faces[faces[i]].length;
    double v = face_values[faces[i]];
    nodal[2 * i] += len / 6.0 * v;
    weight[2 * i] += len / 6.0;
    nodal[2 * i + 1] += 2.0 * len / 3.0 * v;
    weight[2 * i + 1] += 2.0 * len / 3.0;
    nodal[2 * i + 2] += len / 6.0 * v;
    weight[2 * i + 2] += len / 6.0;
  }
  for (std::size_t k = 0; k < nodal.size(); ++k) nodal[k] /= weight[k];
  return nodal;
}

std::vector<double> fracture_trace_arclengths(const FracturedMesh& mesh, int fracture) {
  const auto& faces = mesh.fracture_faces_of[fracture];
  std::vector<double> s;
  double arc = 0.0;
  s.push_back(0.0);
  for (int f : faces) {
    double len = mesh.fracture_faces[f].length;
    s.push_back(arc + 0.5 * len);
    s.push_back(arc + len);
    arc += len;
  }
  return s;
}

void write_face_csv(const FracturedMesh& mesh, const MechSystem& sys, const ContactSystem& state,
                    const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "fracture,arclength,jump_n,jump_t,lambda_n,lambda_t,state\n";
  for (int f = 0; f < mesh.n_fracture_faces(); ++f) {
    const FractureFace& face = mesh.fracture_faces[f];
    JumpNT j = jump_average(mesh, sys, state.u, f);
    out << face.frac << "," << face.arclength_mid << "," << j.n << "," << j.t << ","
        << state.lambda_n[f] << "," << state.lambda_t[f] << "," << to_string(state.state[f])
        << "\n";
  }
}

void write_iteration_csv(const ContactStats& stats, const std::string& path) {
  std::ofstream out(path);
  out.precision(17);
  out << "iteration,residual,n_open,n_stick,n_slip\n";
  for (const auto& rec : stats.history)
    out << rec.iteration << "," << rec.residual << "," << rec.n_open << "," << rec.n_stick << ","
        << rec.n_slip << "\n";
}

std::vector<double> cell_divergence(const FracturedMesh& mesh, const Vector& u) {
  std::vector<double> div(mesh.n_cells(), 0.0);
  for (int t = 0; t < mesh.n_cells(); ++t) {
    P2Element el = p2_element(mesh, t);
    double s = 0.0;
    for (int q = 0; q < 3; ++q)
      for (int i = 0; i < 6; ++i)
        s += el.wq * (el.grad[q][i][0] * u[2 * el.nodes[i]] +
                      el.grad[q][i][1] * u[2 * el.nodes[i] + 1]);
    div[t] = s / mesh.tri_area[t];
  }
  return div;
}

double elastic_inner(const FracturedMesh& mesh, double young, double poisson, const Vector& u,
                     const Vector& v) {
  const double mu = young / (2.0 * (1.0 + poisson));
  const double lam = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
  double total = 0.0;
  for (int t = 0; t < mesh.n_cells(); ++t) {
    P2Element el = p2_element(mesh, t);
    for (int q = 0; q < 3; ++q) {
      Eigen::Matrix2d gu = Eigen::Matrix2d::Zero(), gv = Eigen::Matrix2d::Zero();
      for (int i = 0; i < 6; ++i)
        for (int a = 0; a < 2; ++a) {
          gu.row(a) += u[2 * el.nodes[i] + a] * el.grad[q][i].transpose();
          gv.row(a) += v[2 * el.nodes[i] + a] * el.grad[q][i].transpose();
        }
      Eigen::Matrix2d eu = 0.5 * (gu + gu.transpose());
      Eigen::Matrix2d ev = 0.5 * (gv + gv.transpose());
      Eigen::Matrix2d su = 2.0 * mu * eu + lam * eu.trace() * Eigen::Matrix2d::Identity();
      total += el.wq * (su.array() * ev.array()).sum();
    }
  }
  return total;
}

double load_work(const FracturedMesh& mesh, const MechScenario& scenario, const Vector& du) {
  double w = 0.0;
  for (int t = 0; t < mesh.n_cells(); ++t) {
    P2Element el = p2_element(mesh, t);
    for (int q = 0; q < 3; ++q)
      for (int i = 0; i < 6; ++i) {
        Vec2 g = el.grad[q][i];
        for (int a = 0; a < 2; ++a) {
          double dua = du[2 * el.nodes[i] + a];
          w += el.wq * el.val[q][i] * scenario.body_force[a] * dua;
          w -= el.wq * dua * (scenario.pre_stress(a, 0) * g[0] + scenario.pre_stress(a, 1) * g[1]);
        }
      }
  }
  for (const auto& [eid, trac] : scenario.neumann_edges) {
    const MeshEdge& me = mesh.edges[eid];
    int t = me.tri[0];
    int n0 = -1, n1 = -1, nm = -1;
    for (int k = 0; k < 3; ++k) {
      if (mesh.tris[t][k] == me.v0) n0 = mesh.tri_corner_node[t][k];
      if (mesh.tris[t][k] == me.v1) n1 = mesh.tri_corner_node[t][k];
      if (mesh.tri_edges[t][k] == eid) nm = mesh.tri_midside_node[t][k];
    }
    double len = (mesh.vertices[me.v1] - mesh.vertices[me.v0]).norm();
    for (int a = 0; a < 2; ++a)
      w += len * trac[a] *
           (kSimpsonEnd * du[2 * n0 + a] + kSimpsonEnd * du[2 * n1 + a] + kSimpsonMid * du[2 * nm + a]);
  }
  return w;
}

}  // namespace porofrac
