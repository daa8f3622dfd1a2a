#pragma once

// Total variation of A(t), phi_kappa(A(t)) and Atil(t) over windows (t_a, t_b]:
// quadrature of the derivative norm on each smooth piece plus the sum of jump
// sizes at the jump times inside the window.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "ltvcert/errors.hpp"
#include "ltvcert/linalg.hpp"
#include "ltvcert/quadrature.hpp"
#include "ltvcert/spectral.hpp"
#include "ltvcert/trajectory.hpp"

namespace ltvcert {

struct VariationBreakdown {
  double continuous_part = 0.0;
  double jump_part = 0.0;
  double total = 0.0;
  double t_a = 0.0;
  double t_b = 0.0;
  /// Accumulated local error estimate of the quadrature.
  double quadrature_error = 0.0;
  bool converged = true;
};

struct VariationOptions {
  double tolerance = 1e-9;  // absolute, per smooth piece
  int max_depth = 30;
  int kink_samples = 256;  // sign-change scan resolution per piece
  double kink_tolerance = 1e-10;
};

namespace detail {

inline double seg_phi(const MatrixTrajectory& traj, std::size_t seg, double kappa,
                      double tau) {
  return phi_clamped(traj.segment_value(seg, tau), kappa);
}

/// d/dt phi_kappa(A(t)) by a five-point stencil that stays inside [lo, hi]
/// (one-sided near the ends).
inline double seg_phi_rate(const MatrixTrajectory& traj, std::size_t seg,
                           double kappa, double tau, double lo, double hi) {
  const double width = hi - lo;
  if (!(width > 0.0)) return 0.0;
  const double h = std::min(1e-5 * std::max(1.0, std::fabs(tau)), width / 8.0);
  auto f = [&](double s) { return seg_phi(traj, seg, kappa, s); };
  if (tau - 2.0 * h >= lo && tau + 2.0 * h <= hi)
    return (-f(tau + 2 * h) + 8.0 * f(tau + h) - 8.0 * f(tau - h) + f(tau - 2 * h)) /
           (12.0 * h);
  if (tau - lo < hi - tau)
    return (-25.0 * f(tau) + 48.0 * f(tau + h) - 36.0 * f(tau + 2 * h) +
            16.0 * f(tau + 3 * h) - 3.0 * f(tau + 4 * h)) /
           (12.0 * h);
  return (25.0 * f(tau) - 48.0 * f(tau - h) + 36.0 * f(tau - 2 * h) -
          16.0 * f(tau - 3 * h) + 3.0 * f(tau - 4 * h)) /
         (12.0 * h);
}

/// Local times in (lo, hi) where alpha(A) + kappa changes sign.
inline std::vector<double> piece_kinks(const MatrixTrajectory& traj, std::size_t seg,
                                       double kappa, double lo, double hi,
                                       const VariationOptions& opt) {
  std::vector<double> out;
  auto g = [&](double tau) {
    return abscissa(traj.segment_value(seg, tau)) + kappa - kPhiZeroThreshold;
  };
  const int n = std::max(2, opt.kink_samples);
  double prev_t = lo;
  double prev_g = g(lo);
  for (int k = 1; k <= n; ++k) {
    const double t = k == n ? hi : lo + (hi - lo) * k / n;
    const double gv = g(t);
    if ((gv > 0.0) != (prev_g > 0.0)) {
      const double root = bisect_root(g, prev_t, t, opt.kink_tolerance);
      if (root > lo && root < hi) out.push_back(root);
    }
    prev_t = t;
    prev_g = gv;
  }
  return out;
}

/// Window pieces further split at phi kinks; each returned piece is smooth.
inline std::vector<Piece> smooth_pieces(const MatrixTrajectory& traj, double kappa,
                                        double t_a, double t_b,
                                        const VariationOptions& opt) {
  std::vector<Piece> out;
  for (const Piece& p : traj.pieces(t_a, t_b)) {
    double start = p.local_start;
    for (double k : piece_kinks(traj, p.segment, kappa, p.local_start, p.local_end, opt)) {
      out.push_back({p.segment, start, k, p.offset});
      start = k;
    }
    out.push_back({p.segment, start, p.local_end, p.offset});
  }
  return out;
}

/// Joint adaptive Simpson over a vector-valued integrand, one subdivision for
/// all components. The extrapolated panel value is Boole's rule, whose
/// weights are positive, so a pointwise inequality between components
/// carries over to the integrals.
template <std::size_t N, class F>
std::array<double, N> joint_simpson(F&& f, double a, double b, double tol,
                                    int max_depth, double& err, bool& converged) {
  using V = std::array<double, N>;
  std::array<double, N> zero{};
  if (!(b > a)) return zero;
  auto comb = [](const V& x, const V& y, const V& z, double w) {
    V r;
    for (std::size_t i = 0; i < N; ++i) r[i] = w * (x[i] + 4.0 * y[i] + z[i]);
    return r;
  };
  std::size_t evals = 0;
  constexpr std::size_t kMaxEvals = 2'000'000;
  std::function<V(double, double, const V&, const V&, const V&, const V&, double, int)> rec =
      [&](double lo, double hi, const V& flo, const V& fmid, const V& fhi, const V& whole,
          double t, int depth) -> V {
    const double m = 0.5 * (lo + hi);
    const V fl = f(0.5 * (lo + m));
    const V fr = f(0.5 * (m + hi));
    evals += 2;
    const V left = comb(flo, fl, fmid, (m - lo) / 6.0);
    const V right = comb(fmid, fr, fhi, (hi - m) / 6.0);
    double delta = 0.0;
    V sum;
    for (std::size_t i = 0; i < N; ++i) {
      sum[i] = left[i] + right[i];
      delta = std::max(delta, std::fabs(sum[i] - whole[i]));
    }
    const bool accept = delta <= 15.0 * t && max_depth - depth >= kMinQuadratureDepth;
    if (accept || depth <= 0 || evals >= kMaxEvals || m <= lo || m >= hi) {
      if (!accept) converged = false;
      err += delta / 15.0;
      for (std::size_t i = 0; i < N; ++i) sum[i] += (sum[i] - whole[i]) / 15.0;
      return sum;
    }
    const V l = rec(lo, m, flo, fl, fmid, left, 0.5 * t, depth - 1);
    const V r = rec(m, hi, fmid, fr, fhi, right, 0.5 * t, depth - 1);
    V out;
    for (std::size_t i = 0; i < N; ++i) out[i] = l[i] + r[i];
    return out;
  };
  const V fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const V whole = comb(fa, fm, fb, (b - a) / 6.0);
  return rec(a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace detail

/// The three variations over one window, computed on shared quadrature
/// nodes.
struct VariationTriple {
  VariationBreakdown A;
  VariationBreakdown phi;
  VariationBreakdown tilde;
};

inline VariationTriple variation_triple(const MatrixTrajectory& traj, double kappa,
                                        double t_a, double t_b,
                                        const VariationOptions& opt = {}) {
  if (!(t_b > t_a)) throw InvalidArgument("variation window requires t_a < t_b");
  if (t_a < 0.0) throw InvalidArgument("variation window requires t_a >= 0");
  VariationTriple out;
  double err = 0.0;
  bool converged = true;
  std::array<double, 3> cont{};
  const int n = traj.dimension();
  for (const Piece& p : detail::smooth_pieces(traj, kappa, t_a, t_b, opt)) {
    auto integrand = [&](double tau) {
      const Matrix da = traj.segment_derivative(p.segment, tau);
      const double dphi =
          detail::seg_phi_rate(traj, p.segment, kappa, tau, p.local_start, p.local_end);
      Matrix dtil = da;
      dtil.diagonal().array() -= dphi;
      return std::array<double, 3>{op_norm(da), std::fabs(dphi), op_norm(dtil)};
    };
    const auto part = detail::joint_simpson<3>(integrand, p.local_start, p.local_end,
                                               opt.tolerance, opt.max_depth, err, converged);
    for (int i = 0; i < 3; ++i) cont[i] += part[i];
  }
  std::array<double, 3> jumps{};
  for (const auto& b : traj.boundaries(t_a, t_b)) {
    if (!b.is_jump) continue;
    const Matrix right = traj.segment_value(b.outgoing, b.local_out);
    const Matrix left = traj.segment_value(b.incoming, b.local_in);
    const double pr = phi_clamped(right, kappa);
    const double pl = phi_clamped(left, kappa);
    Matrix dtil = right - left;
    dtil.diagonal().array() -= (pr - pl);
    jumps[0] += op_norm(right - left);
    jumps[1] += std::fabs(pr - pl);
    jumps[2] += op_norm(dtil);
  }
  (void)n;
  VariationBreakdown* parts[3] = {&out.A, &out.phi, &out.tilde};
  for (int i = 0; i < 3; ++i) {
    parts[i]->continuous_part = cont[i];
    parts[i]->jump_part = jumps[i];
    parts[i]->total = cont[i] + jumps[i];
    parts[i]->t_a = t_a;
    parts[i]->t_b = t_b;
    parts[i]->quadrature_error = err;
    parts[i]->converged = converged;
  }
  return out;
}

/// Total variation of A over (t_a, t_b], from the exact symbolic derivative.
inline VariationBreakdown tv_A(const MatrixTrajectory& traj, double t_a, double t_b,
                               const VariationOptions& opt = {}) {
  if (!(t_b > t_a)) throw InvalidArgument("variation window requires t_a < t_b");
  VariationBreakdown out;
  out.t_a = t_a;
  out.t_b = t_b;
  for (const Piece& p : traj.pieces(t_a, t_b)) {
    auto integrand = [&](double tau) {
      return std::array<double, 1>{op_norm(traj.segment_derivative(p.segment, tau))};
    };
    out.continuous_part +=
        detail::joint_simpson<1>(integrand, p.local_start, p.local_end, opt.tolerance,
                                 opt.max_depth, out.quadrature_error, out.converged)[0];
  }
  for (const auto& b : traj.boundaries(t_a, t_b))
    if (b.is_jump)
      out.jump_part += op_norm(traj.segment_value(b.outgoing, b.local_out) -
                               traj.segment_value(b.incoming, b.local_in));
  out.total = out.continuous_part + out.jump_part;
  return out;
}

inline VariationBreakdown tv_phi(const MatrixTrajectory& traj, double kappa, double t_a,
                                 double t_b, const VariationOptions& opt = {}) {
  return variation_triple(traj, kappa, t_a, t_b, opt).phi;
}

inline VariationBreakdown tv_tilde(const MatrixTrajectory& traj, double kappa, double t_a,
                                   double t_b, const VariationOptions& opt = {}) {
  return variation_triple(traj, kappa, t_a, t_b, opt).tilde;
}

/// Lower bound on the total variation of a path from the uniform dyadic
/// partition of [t_a, t_b] with 2^depth intervals. Refinement can only
/// increase it.
inline double tv_oracle(const std::function<Matrix(double)>& path, double t_a, double t_b,
                        int depth) {
  if (depth < 1) throw InvalidArgument("partition depth must be >= 1");
  const std::size_t n = std::size_t{1} << depth;
  double sum = 0.0;
  Matrix prev = path(t_a);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = i == n ? t_b : t_a + (t_b - t_a) * static_cast<double>(i) / n;
    Matrix cur = path(t);
    sum += op_norm(cur - prev);
    prev = std::move(cur);
  }
  return sum;
}

/// Samplers for tv_oracle. At the end of a non-periodic horizon the left
/// limit stands in for the (undefined) value.
inline std::function<Matrix(double)> path_of(const MatrixTrajectory& traj) {
  return [&traj](double t) {
    if (!traj.periodic() && t >= traj.horizon()) return traj.left_limit(t);
    return traj.value_at(t);
  };
}

inline std::function<Matrix(double)> shifted_path_of(const MatrixTrajectory& traj,
                                                     double kappa) {
  return [&traj, kappa](double t) {
    if (!traj.periodic() && t >= traj.horizon())
      return shift_matrix(traj.left_limit(t), kappa);
    return shift_matrix(traj.value_at(t), kappa);
  };
}

inline std::function<Matrix(double)> phi_path_of(const MatrixTrajectory& traj,
                                                 double kappa) {
  return [&traj, kappa](double t) {
    const Matrix a = (!traj.periodic() && t >= traj.horizon()) ? traj.left_limit(t)
                                                               : traj.value_at(t);
    return Matrix::Constant(1, 1, phi_clamped(a, kappa));
  };
}

/// int ||dAtil|| <= int ||dA|| + int |dphi|; slack = rhs - lhs.
struct Prop1Check {
  bool holds = false;
  double slack = 0.0;
  VariationTriple values;
};

inline Prop1Check check_prop1(const MatrixTrajectory& traj, double kappa, double t_a,
                              double t_b, const VariationOptions& opt = {}) {
  Prop1Check c;
  c.values = variation_triple(traj, kappa, t_a, t_b, opt);
  c.slack = c.values.A.total + c.values.phi.total - c.values.tilde.total;
  c.holds = c.slack >= -1e-9;
  return c;
}

}  // namespace ltvcert
