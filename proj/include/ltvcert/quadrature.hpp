#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>

namespace ltvcert {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;
};

/// Adaptive Simpson quadrature with Richardson correction. `tolerance` is the
/// absolute target over [a, b]; recursion stops at `max_depth` or when the
/// evaluation budget is exhausted, in which case `converged` is false and
/// `error_estimate` holds the accumulated local estimates. Panels are never
/// accepted above kMinQuadratureDepth, so an integrand that happens to agree
/// with a parabola on the first five nodes is still resolved.
inline constexpr int kMinQuadratureDepth = 4;

class AdaptiveSimpson {
 public:
  explicit AdaptiveSimpson(double tolerance = 1e-8, int max_depth = 30,
                           std::size_t max_evaluations = 2'000'000)
      : tolerance_(tolerance),
        max_depth_(max_depth),
        max_evaluations_(max_evaluations) {}

  template <class F>
  QuadratureResult integrate(F&& f, double a, double b) const {
    QuadratureResult r;
    if (!(b > a)) return r;
    const double fa = f(a);
    const double fb = f(b);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    r.evaluations = 3;
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    r.value = recurse(f, a, b, fa, fm, fb, whole, tolerance_, max_depth_, r);
    return r;
  }

 private:
  template <class F>
  double recurse(F& f, double a, double b, double fa, double fm, double fb,
                 double whole, double tol, int depth,
                 QuadratureResult& r) const {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    r.evaluations += 2;
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * tol && max_depth_ - depth >= kMinQuadratureDepth) {
      r.error_estimate += std::fabs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    if (depth <= 0 || r.evaluations >= max_evaluations_ || m <= a || m >= b) {
      r.converged = false;
      r.error_estimate += std::fabs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    return recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, r) +
           recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, r);
  }

  double tolerance_;
  int max_depth_;
  std::size_t max_evaluations_;
};

/// Golden-section search for a maximum of f on [a, b]. Returns (argmax, max),
/// including the endpoints as candidates.
template <class F>
std::pair<double, double> golden_section_max(F&& f, double a, double b,
                                             double tol = 1e-10,
                                             int max_iter = 200) {
  constexpr double kInvPhi = 0.6180339887498949;
  double best_t = a;
  double best_v = f(a);
  const double fb = f(b);
  if (fb > best_v) {
    best_t = b;
    best_v = fb;
  }
  double lo = a, hi = b;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < max_iter && (hi - lo) > tol; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    }
  }
  if (f1 > best_v) {
    best_t = x1;
    best_v = f1;
  }
  if (f2 > best_v) {
    best_t = x2;
    best_v = f2;
  }
  return {best_t, best_v};
}

/// Bisection on a sign change of g over [a, b] (g(a) and g(b) of opposite
/// sign, or one of them zero). Stops when the bracket is below `tol`.
template <class G>
double bisect_root(G&& g, double a, double b, double tol = 1e-10,
                   int max_iter = 200) {
  double ga = g(a);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    const double m = 0.5 * (a + b);
    const double gm = g(m);
    if ((gm > 0.0) == (ga > 0.0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace ltvcert
