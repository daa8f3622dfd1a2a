#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "ltvcert/linalg.hpp"
#include "ltvcert/lyapunov.hpp"
#include "support/generators.hpp"
#include "support/systems.hpp"

namespace {

using namespace ltvcert;
using ltvtest::mat;
using ltvtest::Rng;

// Independent oracle: the full n^2 Kronecker system
// (I (x) At^T + At^T (x) I) vec(P) = -vec(I).
Matrix kronecker_lyapunov(const Matrix& a) {
  const Eigen::Index n = a.rows();
  Matrix k = Matrix::Zero(n * n, n * n);
  const Matrix at = a.transpose();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      k.block(i * n, j * n, n, n) += at(i, j) * Matrix::Identity(n, n);
      if (i == j) k.block(i * n, j * n, n, n) += at;
    }
  Vector rhs = Vector::Zero(n * n);
  for (Eigen::Index i = 0; i < n; ++i) rhs(i * n + i) = -1.0;
  const Vector v = k.fullPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

TEST(Expm, ClosedForms) {
  EXPECT_LT((expm(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)).norm(), 1e-15);
  const Matrix r = expm(std::numbers::pi * mat({{0, 1}, {-1, 0}}));
  EXPECT_LT((r + Matrix::Identity(2, 2)).norm(), 1e-10);
  EXPECT_NEAR(expm(mat({{-1}}))(0, 0), std::exp(-1.0), 1e-15);
  const Matrix big = expm(mat({{-10, 50}, {0, -10}}));
  EXPECT_NEAR(big(0, 1), 50 * std::exp(-10.0), 1e-12);
}

TEST(Lyapunov, ClosedForms) {
  EXPECT_LT((solve_lyapunov(-Matrix::Identity(2, 2)).P - 0.5 * Matrix::Identity(2, 2)).norm(),
            1e-15);
  EXPECT_LT((solve_lyapunov(mat({{-1, 1}, {-1, -1}})).P - 0.5 * Matrix::Identity(2, 2)).norm(),
            1e-14);
  EXPECT_LT((solve_lyapunov(mat({{-2.1, 1}, {-1, -2.1}})).P - Matrix::Identity(2, 2) / 4.2).norm(),
            1e-14);
  EXPECT_THROW(solve_lyapunov(mat({{1, 0}, {0, -1}})), LyapunovError);
  EXPECT_THROW(solve_lyapunov(mat({{0, 1}, {-1, 0}})), LyapunovError);
}

TEST(Lyapunov, ScalarOracleExact) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = -rng.uniform(0.01, 50);
    EXPECT_NEAR(solve_lyapunov(mat({{a}})).P(0, 0), -1.0 / (2 * a), 1e-12 / std::fabs(a));
  }
}

TEST(LyapunovProperty, ResidualAndKroneckerOracle) {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = rng.integer(1, 6);
    const Matrix a = ltvtest::random_hurwitz(rng, n, rng.uniform(0.2, 2));
    const LyapunovSolution s = solve_lyapunov(a);
    const Matrix res = a.transpose() * s.P + s.P * a + Matrix::Identity(n, n);
    ASSERT_LE(op_norm(res), 1e-8 * (1 + op_norm(s.P)));
    ASSERT_LE((s.P - s.P.transpose()).norm(), 1e-12 * (1 + s.P.norm()));
    ASSERT_LE(op_norm(s.P - kronecker_lyapunov(a)), 1e-8 * (1 + op_norm(s.P)));
    ASSERT_GT(symmetric_eig_range(s.P).first, 0.0);
  }
}

TEST(Constants, Formula) {
  const ConstantsBundle k = constants_formula(2.32594, 0.1, 1.0, 0.5, 1.0);
  EXPECT_NEAR(k.c1, 1.0 / (2 * (2.32594 + 1.1)), 1e-12);
  EXPECT_NEAR(k.c1, 0.14595, 1e-5);
  EXPECT_EQ(constants_formula(3, 0.1, 2, 1, 1).c2, 0.5);
  EXPECT_NEAR(constants_formula(4.0, -2.0, 1.0, 0.5, 1.0).c1, 1.0 / 8.0, 1e-15);
  EXPECT_THROW(constants_formula(1, 0, 1, 1.5, 1), InvalidArgument);
  EXPECT_THROW(constants_formula(1, 0, 1, 0.5, 0.5), InvalidArgument);
}

TEST(Constants, EstimateC) {
  const MatrixTrajectory neg = constant_trajectory(-Matrix::Identity(2, 2), 1.0);
  // Atil = -2 I after the shift, so the supremum is attained at s = 0.
  EXPECT_NEAR(estimate_c(neg, 1.0, 0.5, 20.0, 0.1), 1.05, 1e-12);

  const MatrixTrajectory normal = ltvtest::example_system();
  EXPECT_NEAR(estimate_c(normal, 1.0, 0.5, 20.0, ltvtest::kTwoPi / 64), 1.05, 1e-9);

  // Non-normal: c = max_s exp(-0.5 s) ||[[1, 10 s], [0, 1]]|| by a fine grid.
  const MatrixTrajectory jordan = constant_trajectory(mat({{0, 10}, {0, 0}}), 1.0);
  double oracle = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double s = 20.0 * i / 200000;
    oracle = std::max(oracle, std::exp(-0.5 * s) * op_norm(mat({{1, 10 * s}, {0, 1}})));
  }
  const double c = estimate_c(jordan, 1.0, 0.5, 20.0, 0.5);
  EXPECT_GT(c, 1.0);
  EXPECT_NEAR(c / 1.05, oracle, 1e-3 * oracle);
}

TEST(Constants, Spectral) {
  const ConstantsBundle k = constants_spectral(ltvtest::example_system(), 1.0, ltvtest::kTwoPi / 512);
  EXPECT_NEAR(k.c1, 0.2381, 1e-3);
  EXPECT_NEAR(k.c2, 0.5, 1e-3);
  const ConstantsBundle h = constants_spectral(constant_trajectory(Matrix::Zero(2, 2)), 1.0, 0.1);
  EXPECT_NEAR(h.c1, 0.5, 1e-6);
  EXPECT_NEAR(h.c2, 0.5, 1e-6);
  const ConstantsBundle d =
      constants_spectral(constant_trajectory(mat({{-2.1, 1}, {-1, -2.1}})), 0.5, 0.1);
  EXPECT_NEAR(d.c1, 1 / 4.2, 1e-6);
  EXPECT_NEAR(d.c2, 1 / 4.2, 1e-6);
}

TEST(LemmaTwo, ExampleEndpointsAndDegenerateWindow) {
  const Matrix a0 = mat({{-1, 1}, {-1, -1}}), a1 = mat({{-2.1, 1}, {-1, -2.1}});
  const BoundCheck c = p_difference_check(solve_lyapunov(a0).P, solve_lyapunov(a1).P, a0, a1, 0.5);
  EXPECT_TRUE(c.holds);
  EXPECT_NEAR(c.slack, 0.55 - (0.5 - 1 / 4.2), 1e-12);
  const BoundCheck z = p_difference_check(solve_lyapunov(a0).P, solve_lyapunov(a0).P, a0, a0, 0.5);
  EXPECT_TRUE(z.holds);
  EXPECT_EQ(z.slack, 0.0);
}

TEST(LemmaTwoProperty, RandomPairs) {
  Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = rng.integer(1, 5);
    const Matrix a = ltvtest::random_hurwitz(rng, n, rng.uniform(0.3, 2));
    const Matrix b = ltvtest::random_hurwitz(rng, n, rng.uniform(0.3, 2));
    const Matrix pa = solve_lyapunov(a).P, pb = solve_lyapunov(b).P;
    const double c2 = std::max(symmetric_eig_range(pa).second, symmetric_eig_range(pb).second);
    ASSERT_TRUE(p_difference_check(pa, pb, a, b, c2).holds);
  }
}

}  // namespace
