#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ltvcert/errors.hpp"
#include "ltvcert/linalg.hpp"
#include "ltvcert/trajectory.hpp"

namespace ltvcert {

namespace detail {

/// Diagonal similarity scaling by powers of two (Parlett-Reinsch) so that
/// row and column norms are comparable. Eigenvalues are unchanged exactly.
inline Matrix balance(Matrix a) {
  constexpr double kRadix = 2.0;
  constexpr double kRadix2 = kRadix * kRadix;
  const Eigen::Index n = a.rows();
  bool done = false;
  for (int sweep = 0; !done && sweep < 100; ++sweep) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::fabs(a(j, i));
        r += std::fabs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / kRadix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= kRadix;
        c *= kRadix2;
      }
      g = r * kRadix;
      while (c > g) {
        f /= kRadix;
        c /= kRadix2;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
  return a;
}

/// Largest real part among eigenvalues of a real quasi-triangular Schur
/// factor.
inline double abscissa_of_schur(const Matrix& t) {
  const Eigen::Index n = t.rows();
  double best = -std::numeric_limits<double>::infinity();
  Eigen::Index i = 0;
  while (i < n) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      const double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
      const double p = 0.5 * (a - d);
      const double disc = p * p + b * c;
      const double mid = 0.5 * (a + d);
      best = std::max(best, disc >= 0.0 ? mid + std::sqrt(disc) : mid);
      i += 2;
    } else {
      best = std::max(best, t(i, i));
      i += 1;
    }
  }
  return best;
}

}  // namespace detail

/// Spectral abscissa: max Re(lambda) over the eigenvalues of m. Balancing,
/// Hessenberg reduction and shifted QR (Eigen's real Schur), capped at
/// 100*n sweeps; throws ConvergenceError carrying the best estimate.
inline double abscissa(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("abscissa: matrix must be square");
  if (!m.allFinite()) throw InvalidArgument("abscissa: non-finite entries");
  const Eigen::Index n = m.rows();
  if (n == 1) return m(0, 0);
  const Matrix b = detail::balance(m);
  Eigen::RealSchur<Matrix> schur(n);
  schur.setMaxIterations(100 * n);
  schur.compute(b, /*computeU=*/false);
  const double estimate = detail::abscissa_of_schur(schur.matrixT());
  if (schur.info() != Eigen::Success)
    throw ConvergenceError("abscissa: QR iteration did not converge", estimate);
  return estimate;
}

inline double ramp(double s) { return s > 0.0 ? s : 0.0; }

/// Unstable excess ramp(alpha(M) + kappa).
inline double phi_kappa(const Matrix& m, double kappa) {
  if (!(kappa > 0.0)) throw InvalidArgument("phi_kappa: kappa must be positive");
  return ramp(abscissa(m) + kappa);
}

/// phi values at or below this are treated as exactly zero by the variation
/// and criterion code.
inline constexpr double kPhiZeroThreshold = 1e-12;

inline double phi_clamped(const Matrix& m, double kappa) {
  const double p = phi_kappa(m, kappa);
  return p <= kPhiZeroThreshold ? 0.0 : p;
}

/// M - phi_kappa(M) I; its abscissa is at most -kappa (up to the zero
/// threshold on phi).
inline Matrix shift_matrix(const Matrix& m, double kappa) {
  const double p = phi_clamped(m, kappa);
  Matrix out = m;
  out.diagonal().array() -= p;
  return out;
}

/// The kappa-shifted path Atil(t) = A(t) - phi_kappa(A(t)) I over a base
/// trajectory. Holds a reference; the trajectory must outlive it.
class ShiftedTrajectory {
 public:
  ShiftedTrajectory(const MatrixTrajectory& base, double kappa)
      : base_(&base), kappa_(kappa) {
    if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  }

  const MatrixTrajectory& base() const { return *base_; }
  double kappa() const { return kappa_; }

  Matrix value_at(double t) const { return shift_matrix(base_->value_at(t), kappa_); }
  Matrix left_limit(double t) const { return shift_matrix(base_->left_limit(t), kappa_); }
  Matrix segment_value(std::size_t seg, double tau) const {
    return shift_matrix(base_->segment_value(seg, tau), kappa_);
  }
  double phi_at(double t) const { return phi_kappa(base_->value_at(t), kappa_); }

 private:
  const MatrixTrajectory* base_;
  double kappa_;
};

inline Matrix shifted_value(const MatrixTrajectory& traj, double kappa, double t) {
  return ShiftedTrajectory(traj, kappa).value_at(t);
}

}  // namespace ltvcert
