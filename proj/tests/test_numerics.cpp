#include <doctest.h>

#include <random>

#include "porofrac/numerics.hpp"

using namespace porofrac;

namespace {
SparseMatrix from_dense(const Eigen::MatrixXd& m) {
  SparseBuilder b((int)m.rows(), (int)m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) b.add(i, j, m(i, j));
  return b.compress();
}
}  // namespace

TEST_CASE("sparse builder sorts and merges duplicates") {
  SparseBuilder b(2, 2);
  b.add(0, 1, 2.0);
  b.add(0, 0, 1.0);
  b.add(0, 1, 3.0);
  b.add(1, 1, 4.0);
  SparseMatrix m = b.compress();
  CHECK(m.row_ptr[1] == 2);
  CHECK(m.col_idx[0] == 0);
  CHECK(m.coeff(0, 1) == 5.0);
  CHECK(m.coeff(1, 1) == 4.0);
  CHECK(m.structurally_symmetric == false);
}

TEST_CASE("lu solves the identity") {
  SparseBuilder b(3, 3);
  for (int i = 0; i < 3; ++i) b.add(i, i, 1.0);
  Vector rhs(3);
  rhs << 1, 2, 3;
  Vector x = lu_solve(b.compress(), rhs);
  CHECK((x - rhs).norm() == doctest::Approx(0.0));
}

TEST_CASE("lu solves a small dense system") {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 3;
  Vector rhs(2);
  rhs << 3, 4;
  Vector x = lu_solve(from_dense(a), rhs);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lu handles a saddle-point block against the dense oracle") {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> dist;
  const int n = 20, m = 6;
  Eigen::MatrixXd c = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return dist(gen); });
  Eigen::MatrixXd a = c * c.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd bb = Eigen::MatrixXd::NullaryExpr(m, n, [&]() { return dist(gen); });
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n + m, n + m);
  k.topLeftCorner(n, n) = a;
  k.topRightCorner(n, m) = bb.transpose();
  k.bottomLeftCorner(m, n) = bb;
  Vector rhs = Vector::NullaryExpr(n + m, [&]() { return dist(gen); });
  Vector x = lu_solve(from_dense(k), rhs);
  Vector x_ref = k.fullPivLu().solve(rhs);
  CHECK((x - x_ref).norm() / x_ref.norm() < 1e-10);
}

TEST_CASE("lu reports the singular equation") {
  SparseBuilder b(3, 3);
  b.add(0, 0, 1.0);
  b.add(1, 1, 1.0);
  b.add(2, 0, 1.0);  // column 2 is structurally empty
  bool threw = false;
  try {
    lu_solve(b.compress(), Vector::Zero(3));
  } catch (const SingularMatrixError& e) {
    threw = true;
    CHECK(e.equation >= 0);
  }
  CHECK(threw);
}

TEST_CASE("lu random diagonally dominant reproduces manufactured solutions") {
  std::mt19937_64 gen(1234);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 39);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 40;
    SparseBuilder b(n, n);
    std::vector<double> diag(n, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < 4; ++k) {
        int j = pick(gen);
        double v = dist(gen);
        if (j != i) {
          b.add(i, j, v);
          diag[i] += std::abs(v);
        }
      }
      b.add(i, i, diag[i] + 1.0 + std::abs(dist(gen)));
    }
    SparseMatrix a = b.compress();
    Vector x_true = Vector::NullaryExpr(n, [&]() { return dist(gen); });
    Vector rhs = a.multiply(x_true);
    Vector x = lu_solve(a, rhs);
    REQUIRE((x - x_true).norm() <= 1e-10 * (1.0 + x_true.norm()));
  }
}

TEST_CASE("lu respects a fill order permutation") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> dist;
  const int n = 30;
  Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return dist(gen); }) +
                      10.0 * Eigen::MatrixXd::Identity(n, n);
  std::vector<Vec2> pos(n);
  for (int i = 0; i < n; ++i) pos[i] = Vec2(dist(gen), dist(gen));
  Vector rhs = Vector::NullaryExpr(n, [&]() { return dist(gen); });
  Vector x = lu_solve(from_dense(a), rhs, nested_dissection_order(pos));
  Vector x_ref = a.fullPivLu().solve(rhs);
  CHECK((x - x_ref).norm() / x_ref.norm() < 1e-10);
}

TEST_CASE("gmres solves the identity in one iteration") {
  Vector rhs(5);
  rhs << 1, -2, 3, -4, 5;
  LinearOperator op = [](const Vector& v) { return v; };
  KrylovConfig cfg;
  KrylovResult r = gmres_solve(op, rhs, cfg, nullptr);
  CHECK(r.converged);
  CHECK(r.iterations <= 1);
  CHECK((r.x - rhs).norm() < 1e-12);
}

TEST_CASE("gmres on an SPD diagonal converges within n iterations") {
  const int n = 10;
  SparseBuilder b(n, n);
  for (int i = 0; i < n; ++i) b.add(i, i, i + 1.0);
  SparseMatrix a = b.compress();
  Vector rhs = Vector::Ones(n);
  KrylovConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.use_ilu0 = false;
  LinearOperator op = [&](const Vector& v) { return a.multiply(v); };
  KrylovResult r = gmres_solve(op, rhs, cfg, nullptr);
  CHECK(r.converged);
  CHECK(r.iterations <= n);
  for (int i = 0; i < n; ++i) CHECK(r.x[i] == doctest::Approx(1.0 / (i + 1)).epsilon(1e-10));
}

TEST_CASE("matrix-free operator matches the explicit matrix solve") {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> dist;
  const int n = 25;
  Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return dist(gen); }) +
                      8.0 * Eigen::MatrixXd::Identity(n, n);
  SparseMatrix as = from_dense(a);
  Vector rhs = Vector::NullaryExpr(n, [&]() { return dist(gen); });
  KrylovConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.max_iter = 300;
  LinearOperator op = [&](const Vector& v) -> Vector { return a * v; };
  KrylovResult free_r = gmres_solve(op, rhs, cfg, nullptr);
  cfg.use_ilu0 = true;
  KrylovResult mat_r = gmres_solve(as, rhs, cfg);
  REQUIRE(free_r.converged);
  REQUIRE(mat_r.converged);
  CHECK((free_r.x - mat_r.x).norm() / mat_r.x.norm() < 1e-10);
}

TEST_CASE("gmres residual estimates decrease within a restart cycle") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> dist;
  const int n = 40;
  Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return dist(gen); }) +
                      6.0 * Eigen::MatrixXd::Identity(n, n);
  Vector rhs = Vector::NullaryExpr(n, [&]() { return dist(gen); });
  KrylovConfig cfg;
  cfg.restart = 40;
  cfg.rel_tol = 1e-13;
  LinearOperator op = [&](const Vector& v) -> Vector { return a * v; };
  KrylovResult r = gmres_solve(op, rhs, cfg, nullptr);
  for (std::size_t i = 1; i < r.residual_log.size(); ++i)
    CHECK(r.residual_log[i] <= r.residual_log[i - 1] * (1.0 + 1e-12));
}
