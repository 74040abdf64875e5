#ifndef POROFRAC_NUMERICS_HPP
#define POROFRAC_NUMERICS_HPP

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace porofrac {

using Vector = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

/// Compressed sparse row matrix. Column indices are sorted per row and
/// duplicates have been summed by the builder.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;
  std::vector<int> col_idx;
  std::vector<double> vals;
  bool structurally_symmetric = false;

  Vector multiply(const Vector& x) const;
  double coeff(int i, int j) const;
  Eigen::MatrixXd dense() const;
  /// Coordinate text dump (one "i j value" line per entry), for debugging.
  void dump_coordinate(const std::string& path) const;
};

/// Accumulates COO triplets and compresses them into a SparseMatrix.
class SparseBuilder {
 public:
  SparseBuilder(int rows, int cols) : rows_(rows), cols_(cols) {}
  void add(int i, int j, double v) { entries_.push_back({i, j, v}); }
  SparseMatrix compress() const;
  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  struct Entry {
    int i, j;
    double v;
  };
  int rows_, cols_;
  std::vector<Entry> entries_;
};

struct SingularMatrixError : std::runtime_error {
  explicit SingularMatrixError(int eq)
      : std::runtime_error("singular matrix at equation " + std::to_string(eq)),
        equation(eq) {}
  int equation;
};

/// Sparse LU factorization, left-looking column algorithm with threshold
/// partial pivoting (pivot accepted when within 1e-3 of the column max).
/// An optional symmetric fill-reducing permutation can be supplied; callers
/// with mesh-borne systems pass a nested-dissection order of the dof
/// coordinates.
class SparseLU {
 public:
  void factor(const SparseMatrix& a, const std::vector<int>& fill_order = {});
  Vector solve(const Vector& rhs) const;
  bool factored() const { return n_ > 0; }
  std::size_t fill_nnz() const { return l_vals_.size() + u_vals_.size(); }
  int off_diagonal_pivots() const { return off_diag_pivots_; }

  static constexpr double kPivotThreshold = 1e-3;

 private:
  int n_ = 0;
  // L (unit diagonal, not stored) and U in compressed column form.
  std::vector<int> l_ptr_, l_idx_;
  std::vector<double> l_vals_;
  std::vector<int> u_ptr_, u_idx_;
  std::vector<double> u_vals_;
  std::vector<int> perm_cols_;    // fill order: column j of factor = A(:, q_j)
  std::vector<int> perm_rows_;    // pivot order: row i of factor = A(p_i, :)
  int off_diag_pivots_ = 0;
};

/// Convenience one-shot factor+solve.
Vector lu_solve(const SparseMatrix& a, const Vector& rhs,
                const std::vector<int>& fill_order = {});

/// Recursive coordinate bisection order for dofs attached to 2D positions.
/// When the matrix pattern is supplied, the separator at each level is the
/// exact set of dofs coupling the two halves; near-optimal fill for matrices
/// with mesh-local connectivity.
std::vector<int> nested_dissection_order(const std::vector<Vec2>& dof_pos,
                                         const SparseMatrix* pattern = nullptr);

struct KrylovConfig {
  int restart = 30;
  int max_iter = 400;
  double rel_tol = 1e-8;
  bool use_ilu0 = true;  // ignored for matrix-free operators
};

struct KrylovResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  double final_residual = 0.0;       // relative to |b|
  std::vector<double> residual_log;  // per inner iteration, current cycle included
  bool stagnated = false;
};

using LinearOperator = std::function<Vector(const Vector&)>;

/// Restarted GMRES on an arbitrary linear action; pass a preconditioner
/// action (approximate inverse) or nullptr for none.
KrylovResult gmres_solve(const LinearOperator& op, const Vector& rhs,
                         const KrylovConfig& config,
                         const LinearOperator& precond = nullptr);

/// GMRES on an explicit matrix with an ILU(0) preconditioner built from it.
KrylovResult gmres_solve(const SparseMatrix& a, const Vector& rhs,
                         const KrylovConfig& config);

/// Zero-fill incomplete LU on the sparsity pattern of a.
class Ilu0 {
 public:
  explicit Ilu0(const SparseMatrix& a);
  Vector apply(const Vector& r) const;

 private:
  int n_;
  std::vector<int> row_ptr_, col_idx_, diag_;
  std::vector<double> vals_;
};

}  // namespace porofrac

#endif
