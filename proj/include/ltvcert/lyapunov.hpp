#pragma once

// Lyapunov matrices P(t) solving Atil(t)^T P + P Atil(t) + I = 0 along the
// shifted trajectory, and the sandwich constants c1 <= eig(P(t)) <= c2.

#include <Eigen/LU>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ltvcert/errors.hpp"
#include "ltvcert/linalg.hpp"
#include "ltvcert/parallel.hpp"
#include "ltvcert/regularity.hpp"
#include "ltvcert/spectral.hpp"
#include "ltvcert/trajectory.hpp"

namespace ltvcert {

/// Matrix exponential by scaling and squaring with the degree-13 Pade
/// approximant (Higham 2005).
inline Matrix expm(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("expm: matrix must be square");
  if (!m.allFinite()) throw InvalidArgument("expm: non-finite entries");
  static constexpr std::array<double, 14> b = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  constexpr double kTheta13 = 5.371920351148152;
  const Eigen::Index n = m.rows();
  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > kTheta13) s = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  const Matrix a = m / std::ldexp(1.0, s);
  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
           b[3] * a2 + b[1] * id);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                   b[4] * a4 + b[2] * a2 + b[0] * id;
  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  if (!r.allFinite()) throw Error("expm: overflow");
  return r;
}

struct LyapunovSolution {
  Matrix P;
  double residual_norm = 0.0;
  double condition_estimate = 1.0;
};

/// Threshold on the condition estimate of the symmetric-unknown system.
inline constexpr double kLyapunovConditionLimit = 1e12;

/// Solves Atil^T P + P Atil + I = 0 as a dense linear system in the
/// n(n+1)/2 entries of the symmetric unknown.
inline LyapunovSolution solve_lyapunov(const Matrix& atil) {
  if (atil.rows() != atil.cols()) throw InvalidArgument("solve_lyapunov: matrix must be square");
  const double alpha = abscissa(atil);
  if (!(alpha < 0.0))
    throw LyapunovError("solve_lyapunov: matrix is not Hurwitz (abscissa " +
                        std::to_string(alpha) + ")");
  const int n = static_cast<int>(atil.rows());
  const int m = n * (n + 1) / 2;
  auto idx = [n](int i, int j) {
    if (i > j) std::swap(i, j);
    return i * n - i * (i - 1) / 2 + (j - i);
  };
  Matrix sys = Matrix::Zero(m, m);
  Vector rhs = Vector::Zero(m);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int row = idx(i, j);
      for (int k = 0; k < n; ++k) {
        sys(row, idx(k, j)) += atil(k, i);
        sys(row, idx(i, k)) += atil(k, j);
      }
      rhs(row) = i == j ? -1.0 : 0.0;
    }
  }
  Eigen::FullPivLU<Matrix> lu(sys);
  LyapunovSolution sol;
  const double rcond = lu.rcond();
  sol.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (sol.condition_estimate > kLyapunovConditionLimit)
    throw LyapunovError("solve_lyapunov: ill-conditioned system (condition estimate " +
                        std::to_string(sol.condition_estimate) + ")");
  const Vector x = lu.solve(rhs);
  sol.P.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) sol.P(i, j) = sol.P(j, i) = x(idx(i, j));
  const Matrix res = atil.transpose() * sol.P + sol.P * atil + Matrix::Identity(n, n);
  sol.residual_norm = op_norm(res);
  return sol;
}

enum class ConstantsMode { kFormula, kSpectral };

inline const char* to_string(ConstantsMode m) {
  return m == ConstantsMode::kFormula ? "formula" : "spectral";
}

struct ConstantsBundle {
  double c1 = 0.0;
  double c2 = 0.0;
  double c = 1.0;
  double beta = 0.0;
  double kappa = 0.0;
  ConstantsMode mode = ConstantsMode::kSpectral;
};

/// Closed-form constants c1 = 1/(2(L + ramp(alpha_max + kappa))) and
/// c2 = c^2/(2 beta).
inline ConstantsBundle constants_formula(double L, double alpha_max, double kappa,
                                         double beta, double c) {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  if (!(beta > 0.0 && beta < kappa)) throw InvalidArgument("beta must lie in (0, kappa)");
  if (!(c >= 1.0)) throw InvalidArgument("c must be >= 1");
  if (!(L > 0.0)) throw InvalidArgument("L must be positive");
  ConstantsBundle k;
  k.c1 = 1.0 / (2.0 * (L + ramp(alpha_max + kappa)));
  k.c2 = c * c / (2.0 * beta);
  k.c = c;
  k.beta = beta;
  k.kappa = kappa;
  k.mode = ConstantsMode::kFormula;
  if (k.c1 > k.c2) throw InvalidArgument("formula constants violate c1 <= c2");
  return k;
}

/// Transient constant c with ||exp(s Atil(t))|| <= c exp(-beta s), from the
/// maximum over a (s, t) grid, inflated by 5%.
inline double estimate_c(const MatrixTrajectory& traj, double kappa, double beta,
                         double s_max, double grid_step) {
  if (!(beta > 0.0 && beta < kappa)) throw InvalidArgument("beta must lie in (0, kappa)");
  if (!(s_max > 0.0)) throw InvalidArgument("s_max must be positive");
  const auto grid = sample_grid(traj, grid_step, 200);
  const int ns = std::max(200, static_cast<int>(std::ceil(s_max / grid_step)));
  const double ds = s_max / ns;
  std::vector<double> best(grid.size(), 1.0);
  parallel_for(grid.size(), [&](std::size_t k) {
    const Matrix atil = shift_matrix(traj.segment_value(grid[k].segment, grid[k].local), kappa);
    const Matrix step = expm(ds * atil);
    Matrix power = Matrix::Identity(atil.rows(), atil.cols());
    double b = 1.0;
    for (int j = 1; j <= ns; ++j) {
      power = power * step;
      b = std::max(b, op_norm(power) * std::exp(beta * ds * j));
    }
    best[k] = b;
  });
  return 1.05 * *std::max_element(best.begin(), best.end());
}

/// c1, c2 as the extreme eigenvalues of P(t) over the sample grid, deflated
/// and inflated by 1e-6 relative. beta is kappa/2 and c is the value
/// consistent with c2 = c^2/(2 beta), floored at 1.
inline ConstantsBundle constants_spectral(const MatrixTrajectory& traj, double kappa,
                                          double grid_step) {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  const auto grid = sample_grid(traj, grid_step, 200);
  std::vector<double> lo(grid.size()), hi(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    const Matrix atil = shift_matrix(traj.segment_value(grid[k].segment, grid[k].local), kappa);
    const auto sol = solve_lyapunov(atil);
    const auto [mn, mx] = symmetric_eig_range(sol.P);
    lo[k] = mn;
    hi[k] = mx;
  });
  ConstantsBundle k;
  k.c1 = *std::min_element(lo.begin(), lo.end()) * (1.0 - 1e-6);
  k.c2 = *std::max_element(hi.begin(), hi.end()) * (1.0 + 1e-6);
  k.kappa = kappa;
  k.beta = 0.5 * kappa;
  k.c = std::max(1.0, std::sqrt(2.0 * k.beta * k.c2));
  k.mode = ConstantsMode::kSpectral;
  return k;
}

struct BoundCheck {
  bool holds = false;
  double slack = 0.0;
};

/// ||P_b - P_a|| <= 2 c2^2 ||Atil_b - Atil_a||; slack = rhs - lhs.
inline BoundCheck p_difference_check(const Matrix& p_a, const Matrix& p_b,
                                     const Matrix& atil_a, const Matrix& atil_b,
                                     double c2) {
  const double lhs = op_norm(p_b - p_a);
  const double rhs = 2.0 * c2 * c2 * op_norm(atil_b - atil_a);
  // Rounding floor of the two solves.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                       (op_norm(p_a) + op_norm(p_b));
  return {lhs <= rhs + floor, rhs - lhs};
}

}  // namespace ltvcert
