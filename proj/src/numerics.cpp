#include "porofrac/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>

namespace porofrac {

Vector SparseMatrix::multiply(const Vector& x) const {
  Vector y = Vector::Zero(rows);
  for (int i = 0; i < rows; ++i) {
    double s = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += vals[k] * x[col_idx[k]];
    y[i] = s;
  }
  return y;
}

double SparseMatrix::coeff(int i, int j) const {
  for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
    if (col_idx[k] == j) return vals[k];
  return 0.0;
}

Eigen::MatrixXd SparseMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) m(i, col_idx[k]) = vals[k];
  return m;
}

void SparseMatrix::dump_coordinate(const std::string& path) const {
  std::ofstream out(path);
  out.precision(17);
  out << rows << " " << cols << " " << vals.size() << "\n";
  for (int i = 0; i < rows; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      out << i << " " << col_idx[k] << " " << vals[k] << "\n";
}

SparseMatrix SparseBuilder::compress() const {
  SparseMatrix m;
  m.rows = rows_;
  m.cols = cols_;
  std::vector<int> count(rows_ + 1, 0);
  for (const Entry& e : entries_) count[e.i + 1]++;
  for (int i = 0; i < rows_; ++i) count[i + 1] += count[i];
  std::vector<int> cidx(entries_.size());
  std::vector<double> cval(entries_.size());
  std::vector<int> cursor(count.begin(), count.end() - 1);
  for (const Entry& e : entries_) {
    int k = cursor[e.i]++;
    cidx[k] = e.j;
    cval[k] = e.v;
  }
  m.row_ptr.assign(rows_ + 1, 0);
  std::vector<std::pair<int, double>> row;
  for (int i = 0; i < rows_; ++i) {
    row.clear();
    for (int k = count[i]; k < count[i + 1]; ++k) row.push_back({cidx[k], cval[k]});
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k > 0 && row[k].first == row[k - 1].first) {
        m.vals.back() += row[k].second;
      } else {
        m.col_idx.push_back(row[k].first);
        m.vals.push_back(row[k].second);
      }
    }
    m.row_ptr[i + 1] = (int)m.col_idx.size();
  }
  if (rows_ == cols_) {
    bool sym = true;
    for (int i = 0; i < rows_ && sym; ++i)
      for (int k = m.row_ptr[i]; k < m.row_ptr[i + 1] && sym; ++k) {
        int j = m.col_idx[k];
        bool found = false;
        int lo = m.row_ptr[j], hi = m.row_ptr[j + 1];
        while (lo < hi) {
          int mid = (lo + hi) / 2;
          if (m.col_idx[mid] == i) {
            found = true;
            break;
          }
          if (m.col_idx[mid] < i)
            lo = mid + 1;
          else
            hi = mid;
        }
        sym = found;
      }
    m.structurally_symmetric = sym;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Fill-reducing order by recursive coordinate bisection. Halves are numbered
// contiguously so LU fronts stay local to the mesh geometry.

namespace {
void nd_recurse(const std::vector<Vec2>& pos, std::vector<int>& idx, int lo, int hi,
                std::vector<int>& out) {
  int n = hi - lo;
  if (n <= 24) {
    for (int k = lo; k < hi; ++k) out.push_back(idx[k]);
    return;
  }
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (int k = lo; k < hi; ++k) {
    const Vec2& p = pos[idx[k]];
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  int axis = (xmax - xmin >= ymax - ymin) ? 0 : 1;
  std::sort(idx.begin() + lo, idx.begin() + hi,
            [&](int a, int b) { return pos[a][axis] < pos[b][axis]; });
  // Geometric separator: the middle band, numbered after both halves.
  int band = std::max(2, (int)std::lround(3.0 * std::sqrt((double)n)));
  band = std::min(band, n / 2);
  int s0 = lo + (n - band) / 2, s1 = s0 + band;
  std::vector<int> sep(idx.begin() + s0, idx.begin() + s1);
  std::vector<int> left(idx.begin() + lo, idx.begin() + s0);
  std::vector<int> right(idx.begin() + s1, idx.begin() + hi);
  std::copy(left.begin(), left.end(), idx.begin() + lo);
  std::copy(right.begin(), right.end(), idx.begin() + lo + (int)left.size());
  nd_recurse(pos, idx, lo, lo + (int)left.size(), out);
  nd_recurse(pos, idx, lo + (int)left.size(), lo + (int)left.size() + (int)right.size(), out);
  for (int v : sep) out.push_back(v);
}
}  // namespace

namespace {
// Pattern-aware variant: split by the median coordinate, peel off the exact
// vertex separator (dofs with a neighbor on the other side).
void nd_graph_recurse(const std::vector<Vec2>& pos, const SparseMatrix& a,
                      std::vector<char>& side, std::vector<int>& work, int lo, int hi,
                      std::vector<int>& out) {
  int n = hi - lo;
  if (n <= 24) {
    for (int k = lo; k < hi; ++k) out.push_back(work[k]);
    return;
  }
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (int k = lo; k < hi; ++k) {
    const Vec2& p = pos[work[k]];
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  int axis = (xmax - xmin >= ymax - ymin) ? 0 : 1;
  int mid = lo + n / 2;
  std::nth_element(work.begin() + lo, work.begin() + mid, work.begin() + hi,
                   [&](int u, int v) { return pos[u][axis] < pos[v][axis]; });
  for (int k = lo; k < hi; ++k) side[work[k]] = (k < mid) ? 1 : 2;
  // Separator: any dof coupled across the cut (either direction).
  std::vector<int> sep, left, right;
  for (int k = lo; k < hi; ++k) {
    int i = work[k];
    bool cross = false;
    for (int e = a.row_ptr[i]; e < a.row_ptr[i + 1] && !cross; ++e) {
      int j = a.col_idx[e];
      cross = side[j] != 0 && side[j] != side[i];
    }
    if (cross)
      sep.push_back(i);
    else if (side[i] == 1)
      left.push_back(i);
    else
      right.push_back(i);
  }
  for (int k = lo; k < hi; ++k) side[work[k]] = 0;
  if (left.empty() || right.empty() || (int)sep.size() > n / 2) {
    // Degenerate cut; fall back to emitting this block as-is.
    for (int k = lo; k < hi; ++k) out.push_back(work[k]);
    return;
  }
  int p = lo;
  for (int v : left) work[p++] = v;
  int left_hi = p;
  for (int v : right) work[p++] = v;
  int right_hi = p;
  for (int v : sep) work[p++] = v;
  nd_graph_recurse(pos, a, side, work, lo, left_hi, out);
  nd_graph_recurse(pos, a, side, work, left_hi, right_hi, out);
  for (int k = right_hi; k < hi; ++k) out.push_back(work[k]);
}
}  // namespace

std::vector<int> nested_dissection_order(const std::vector<Vec2>& dof_pos,
                                         const SparseMatrix* pattern) {
  std::vector<int> idx(dof_pos.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> out;
  out.reserve(idx.size());
  if (pattern && pattern->rows == (int)dof_pos.size()) {
    std::vector<char> side(dof_pos.size(), 0);
    nd_graph_recurse(dof_pos, *pattern, side, idx, 0, (int)idx.size(), out);
  } else {
    nd_recurse(dof_pos, idx, 0, (int)idx.size(), out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sparse LU: left-looking column factorization (Gilbert–Peierls) with a
// depth-first symbolic step per column and threshold partial pivoting.

void SparseLU::factor(const SparseMatrix& a, const std::vector<int>& fill_order) {
  if (a.rows != a.cols) throw std::invalid_argument("SparseLU: matrix not square");
  n_ = a.rows;
  perm_cols_ = fill_order;
  if (perm_cols_.empty()) {
    perm_cols_.resize(n_);
    std::iota(perm_cols_.begin(), perm_cols_.end(), 0);
  }
  if ((int)perm_cols_.size() != n_) throw std::invalid_argument("SparseLU: bad fill order");

  std::vector<int> inv_perm(n_);
  for (int k = 0; k < n_; ++k) inv_perm[perm_cols_[k]] = k;

  // CSC of the symmetrically permuted matrix.
  std::vector<int> c_ptr(n_ + 1, 0), c_idx(a.vals.size());
  std::vector<double> c_val(a.vals.size());
  for (int i = 0; i < n_; ++i)
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) c_ptr[inv_perm[a.col_idx[k]] + 1]++;
  for (int j = 0; j < n_; ++j) c_ptr[j + 1] += c_ptr[j];
  {
    std::vector<int> cursor(c_ptr.begin(), c_ptr.end() - 1);
    for (int i = 0; i < n_; ++i)
      for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
        int j = inv_perm[a.col_idx[k]];
        int p = cursor[j]++;
        c_idx[p] = inv_perm[i];
        c_val[p] = a.vals[k];
      }
  }

  l_ptr_.assign(1, 0);
  u_ptr_.assign(1, 0);
  off_diag_pivots_ = 0;
  l_idx_.clear();
  l_vals_.clear();
  u_idx_.clear();
  u_vals_.clear();
  std::vector<int> pivot_of_row(n_, -1);
  perm_rows_.assign(n_, -1);
  std::vector<double> work(n_, 0.0);
  std::vector<char> mark(n_, 0);
  std::vector<int> pattern;
  std::vector<int> dfs_node, dfs_edge;
  pattern.reserve(256);
  dfs_node.reserve(256);
  dfs_edge.reserve(256);

  for (int j = 0; j < n_; ++j) {
    pattern.clear();
    for (int k = c_ptr[j]; k < c_ptr[j + 1]; ++k) {
      int root = c_idx[k];
      if (mark[root]) continue;
      mark[root] = 1;
      dfs_node.push_back(root);
      dfs_edge.push_back(pivot_of_row[root] >= 0 ? l_ptr_[pivot_of_row[root]] : -1);
      while (!dfs_node.empty()) {
        int node = dfs_node.back();
        int pc = pivot_of_row[node];
        bool descended = false;
        if (pc >= 0) {
          int& e = dfs_edge.back();
          while (e < l_ptr_[pc + 1]) {
            int rr = l_idx_[e++];
            if (!mark[rr]) {
              mark[rr] = 1;
              dfs_node.push_back(rr);
              dfs_edge.push_back(pivot_of_row[rr] >= 0 ? l_ptr_[pivot_of_row[rr]] : -1);
              descended = true;
              break;
            }
          }
        }
        if (!descended) {
          pattern.push_back(node);
          dfs_node.pop_back();
          dfs_edge.pop_back();
        }
      }
    }
    for (int k = c_ptr[j]; k < c_ptr[j + 1]; ++k) work[c_idx[k]] += c_val[k];
    // Reverse post-order = topological order of the solve dependencies.
    for (auto it = pattern.rbegin(); it != pattern.rend(); ++it) {
      int r = *it;
      int pc = pivot_of_row[r];
      if (pc < 0) continue;
      double yr = work[r];
      if (yr == 0.0) continue;
      for (int l = l_ptr_[pc]; l < l_ptr_[pc + 1]; ++l) work[l_idx_[l]] -= l_vals_[l] * yr;
    }
    double max_cand = 0.0;
    int best = -1;
    for (int r : pattern) {
      if (pivot_of_row[r] < 0) {
        double av = std::abs(work[r]);
        if (av > max_cand) {
          max_cand = av;
          best = r;
        }
      }
    }
    if (best < 0 || max_cand == 0.0) throw SingularMatrixError(perm_cols_[j]);
    int pivot = best;
    if (mark[j] && pivot_of_row[j] < 0 && std::abs(work[j]) >= kPivotThreshold * max_cand)
      pivot = j;
    if (pivot != j) off_diag_pivots_++;
    double piv_val = work[pivot];
    pivot_of_row[pivot] = j;
    perm_rows_[j] = pivot;
    for (int r : pattern) {
      double v = work[r];
      work[r] = 0.0;
      mark[r] = 0;
      if (r == pivot) continue;
      if (v == 0.0) continue;
      int pc = pivot_of_row[r];
      if (pc >= 0 && pc < j) {
        u_idx_.push_back(pc);
        u_vals_.push_back(v);
      } else {
        l_idx_.push_back(r);
        l_vals_.push_back(v / piv_val);
      }
    }
    u_idx_.push_back(j);
    u_vals_.push_back(piv_val);
    l_ptr_.push_back((int)l_idx_.size());
    u_ptr_.push_back((int)u_idx_.size());
  }
}

Vector SparseLU::solve(const Vector& rhs) const {
  if (!factored()) throw std::runtime_error("SparseLU: not factored");
  if ((int)rhs.size() != n_) throw std::invalid_argument("SparseLU: rhs size mismatch");
  Vector y(n_);
  for (int r = 0; r < n_; ++r) y[r] = rhs[perm_cols_[r]];
  for (int j = 0; j < n_; ++j) {
    double zj = y[perm_rows_[j]];
    if (zj == 0.0) continue;
    for (int l = l_ptr_[j]; l < l_ptr_[j + 1]; ++l) y[l_idx_[l]] -= l_vals_[l] * zj;
  }
  Vector x = Vector::Zero(n_);
  for (int j = n_ - 1; j >= 0; --j) {
    double diag = u_vals_[u_ptr_[j + 1] - 1];
    double xj = y[perm_rows_[j]] / diag;
    x[j] = xj;
    if (xj == 0.0) continue;
    for (int k = u_ptr_[j]; k < u_ptr_[j + 1] - 1; ++k)
      y[perm_rows_[u_idx_[k]]] -= u_vals_[k] * xj;
  }
  Vector out(n_);
  for (int j = 0; j < n_; ++j) out[perm_cols_[j]] = x[j];
  return out;
}

Vector lu_solve(const SparseMatrix& a, const Vector& rhs, const std::vector<int>& fill_order) {
  SparseLU lu;
  lu.factor(a, fill_order);
  return lu.solve(rhs);
}

// ---------------------------------------------------------------------------
// ILU(0)

Ilu0::Ilu0(const SparseMatrix& a) {
  n_ = a.rows;
  row_ptr_ = a.row_ptr;
  col_idx_ = a.col_idx;
  vals_ = a.vals;
  diag_.assign(n_, -1);
  for (int i = 0; i < n_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (col_idx_[k] == i) diag_[i] = k;
  for (int i = 0; i < n_; ++i)
    if (diag_[i] < 0) throw std::runtime_error("Ilu0: structurally zero diagonal");
  std::vector<int> pos(n_, -1);
  for (int i = 0; i < n_; ++i) {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) pos[col_idx_[k]] = k;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      int j = col_idx_[k];
      if (j >= i) break;
      double piv = vals_[diag_[j]];
      if (piv == 0.0) piv = 1e-300;
      double lij = vals_[k] / piv;
      vals_[k] = lij;
      for (int l = diag_[j] + 1; l < row_ptr_[j + 1]; ++l) {
        int p = pos[col_idx_[l]];
        if (p >= 0) vals_[p] -= lij * vals_[l];
      }
    }
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) pos[col_idx_[k]] = -1;
  }
}

Vector Ilu0::apply(const Vector& r) const {
  Vector y(r);
  for (int i = 0; i < n_; ++i) {
    double s = y[i];
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      int j = col_idx_[k];
      if (j >= i) break;
      s -= vals_[k] * y[j];
    }
    y[i] = s;
  }
  for (int i = n_ - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = row_ptr_[i + 1] - 1; k >= row_ptr_[i]; --k) {
      int j = col_idx_[k];
      if (j <= i) break;
      s -= vals_[k] * y[j];
    }
    double d = vals_[diag_[i]];
    if (d == 0.0) d = 1e-300;
    y[i] = s / d;
  }
  return y;
}

// ---------------------------------------------------------------------------
// GMRES (restarted, left preconditioned)

KrylovResult gmres_solve(const LinearOperator& op, const Vector& rhs,
                         const KrylovConfig& config, const LinearOperator& precond) {
  const int n = (int)rhs.size();
  const int m = std::max(1, config.restart);
  KrylovResult res;
  res.x = Vector::Zero(n);

  auto apply_m = [&](const Vector& v) { return precond ? precond(v) : v; };

  const double bnorm_raw = rhs.norm();
  if (bnorm_raw == 0.0) {
    res.converged = true;
    return res;
  }
  double bnorm = apply_m(rhs).norm();
  if (bnorm == 0.0) bnorm = bnorm_raw;

  std::vector<Vector> v(m + 1, Vector::Zero(n));
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
  std::vector<double> cs(m, 0.0), sn(m, 0.0), g(m + 1, 0.0);

  int total_it = 0;
  double prev_cycle_rel = 2.0;
  while (total_it < config.max_iter) {
    Vector r = apply_m(rhs - op(res.x));
    double beta = r.norm();
    double rel0 = beta / bnorm;
    if (rel0 <= config.rel_tol) {
      res.converged = true;
      break;
    }
    v[0] = r / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int k = 0;
    bool breakdown = false;
    for (; k < m && total_it < config.max_iter; ++total_it) {
      Vector w = apply_m(op(v[k]));
      for (int i = 0; i <= k; ++i) {
        h(i, k) = w.dot(v[i]);
        w -= h(i, k) * v[i];
      }
      h(k + 1, k) = w.norm();
      if (h(k + 1, k) > 1e-300)
        v[k + 1] = w / h(k + 1, k);
      else
        breakdown = true;
      for (int i = 0; i < k; ++i) {
        double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      double denom = std::hypot(h(k, k), h(k + 1, k));
      if (denom == 0.0) denom = 1e-300;
      cs[k] = h(k, k) / denom;
      sn[k] = h(k + 1, k) / denom;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++k;
      double rel = std::abs(g[k]) / bnorm;
      res.residual_log.push_back(rel);
      if (rel <= config.rel_tol || breakdown) break;
    }
    Eigen::VectorXd yk(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int jj = i + 1; jj < k; ++jj) s -= h(i, jj) * yk[jj];
      yk[i] = s / h(i, i);
    }
    for (int i = 0; i < k; ++i) res.x += yk[i] * v[i];
    double rel_now = std::abs(g[k]) / bnorm;
    if (rel_now <= config.rel_tol || breakdown) {
      res.converged = rel_now <= config.rel_tol;
      break;
    }
    if (rel_now >= 0.999 * prev_cycle_rel) {
      res.stagnated = true;
      break;
    }
    prev_cycle_rel = rel_now;
  }
  Vector r = apply_m(rhs - op(res.x));
  res.final_residual = r.norm() / bnorm;
  res.converged = res.converged || res.final_residual <= config.rel_tol;
  res.iterations = total_it;
  return res;
}

KrylovResult gmres_solve(const SparseMatrix& a, const Vector& rhs, const KrylovConfig& config) {
  LinearOperator op = [&a](const Vector& x) { return a.multiply(x); };
  if (config.use_ilu0) {
    auto ilu = std::make_shared<Ilu0>(a);
    LinearOperator pre = [ilu](const Vector& r) { return ilu->apply(r); };
    return gmres_solve(op, rhs, config, pre);
  }
  return gmres_solve(op, rhs, config, nullptr);
}

}  // namespace porofrac
