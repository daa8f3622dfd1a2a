#pragma once

// Seeded generators for property tests: matrices, expression trees,
// piecewise trajectories with controlled jumps, and switching schedules.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ltvcert/certify.hpp"
#include "ltvcert/expr.hpp"
#include "ltvcert/linalg.hpp"
#include "ltvcert/perturbation.hpp"
#include "ltvcert/spectral.hpp"
#include "ltvcert/trajectory.hpp"

namespace ltvtest {

using namespace ltvcert;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(eng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

 private:
  std::mt19937_64 eng_;
};

/// Decimal literal that parses back to exactly v; negatives are parenthesized.
inline std::string lit(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return v < 0.0 ? "(" + std::string(buf) + ")" : std::string(buf);
}

inline Matrix random_matrix(Rng& rng, int n, double scale = 1.0) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = scale * rng.normal();
  return m;
}

/// Random matrix shifted so that its abscissa is -margin.
inline Matrix random_hurwitz(Rng& rng, int n, double margin) {
  Matrix m = random_matrix(rng, n);
  const double a = abscissa(m);
  m.diagonal().array() -= a + margin;
  return m;
}

/// Random tree over the full grammar that evaluates without domain errors
/// for every t: divisions and negative powers only by 2 + sin(.) or
/// 2 + cos(.), sqrt only of (.)^2 + 1, exp only of sin(.) or cos(.).
inline std::string random_tree(Rng& rng, int depth, bool allow_abs = false) {
  if (depth <= 0 || rng.coin(0.2)) return rng.coin(0.5) ? "t" : lit(std::round(rng.uniform(-3, 3) * 100) / 100);
  const int kind = rng.integer(0, allow_abs ? 10 : 9);
  auto sub = [&] { return random_tree(rng, depth - 1, allow_abs); };
  switch (kind) {
    case 0: return "(" + sub() + "+" + sub() + ")";
    case 1: return "(" + sub() + "-" + sub() + ")";
    case 2: return "(" + sub() + "*" + sub() + ")";
    case 3: return "(" + sub() + "/(2+sin(" + sub() + ")))";
    case 4: return "sin(" + sub() + ")";
    case 5: return "cos(" + sub() + ")";
    case 6: return "exp(" + std::string(rng.coin() ? "sin(" : "cos(") + sub() + "))";
    case 7: return "sqrt((" + sub() + ")^2+1)";
    case 8: return "(" + sub() + ")^" + std::to_string(rng.integer(0, 3));
    case 9: return "(2+cos(" + sub() + "))^" + std::to_string(rng.integer(-3, -1));
    default: return "abs(" + sub() + ")";
  }
}

/// Smooth closed-form entry c0 + c1 sin(w t + p) + c2 cos(v t) + c3 t.
inline std::string smooth_entry(Rng& rng, double offset, double amplitude) {
  return lit(offset) + "+" + lit(amplitude * rng.uniform(-1, 1)) + "*sin(" +
         lit(rng.uniform(0.5, 4)) + "*t+" + lit(rng.uniform(0, 3)) + ")+" +
         lit(amplitude * rng.uniform(-1, 1)) + "*cos(" + lit(rng.uniform(0.5, 4)) + "*t)+" +
         lit(0.5 * amplitude * rng.uniform(-1, 1)) + "*t";
}

struct PiecewiseOptions {
  int dimension = 2;
  int max_segments = 4;
  int max_jumps = 3;
  double horizon_lo = 1.0;
  double horizon_hi = 3.0;
  /// Diagonal entries are centered in [diag_lo, diag_hi].
  double diag_lo = -1.5;
  double diag_hi = 1.0;
  double off_diag = 1.0;
  double amplitude = 0.8;
  bool periodic = false;
  bool allow_constant_segments = true;
};

/// Random piecewise path with at most max_segments segments and at most
/// max_jumps jumps. A boundary that is not a jump continues the incoming
/// value with a new slope and oscillation, so A is continuous but kinked.
inline MatrixTrajectory random_piecewise(Rng& rng, const PiecewiseOptions& o) {
  const int n = o.dimension;
  const int segs = rng.integer(1, o.max_segments);
  const double T = rng.uniform(o.horizon_lo, o.horizon_hi);
  std::vector<double> cuts;
  for (int i = 1; i < segs; ++i) cuts.push_back(rng.uniform(0.05, 0.95) * T);
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 1; i < cuts.size(); ++i)
    if (cuts[i] - cuts[i - 1] < 0.02 * T) cuts[i] = cuts[i - 1] + 0.02 * T;
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double c) { return c >= 0.98 * T; }),
             cuts.end());
  std::vector<Segment> out;
  int jumps = 0;
  for (std::size_t s = 0; s <= cuts.size(); ++s) {
    Segment seg;
    seg.t_start = s == 0 ? 0.0 : cuts[s - 1];
    seg.t_end = s == cuts.size() ? T : cuts[s];
    const bool jump = s > 0 && jumps < o.max_jumps && rng.coin(0.6);
    if (jump) ++jumps;
    const bool constant = o.allow_constant_segments && rng.coin(0.15);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double center = i == j ? rng.uniform(o.diag_lo, o.diag_hi)
                                     : o.off_diag * rng.uniform(-1, 1);
        std::string e;
        if (s == 0 || jump) {
          e = constant ? lit(center) : smooth_entry(rng, center, o.amplitude);
        } else {
          const double v = out.back().entries[static_cast<std::size_t>(i * n + j)](seg.t_start);
          const std::string dt = "(t-" + lit(seg.t_start) + ")";
          e = lit(v) + "+" + lit(o.amplitude * rng.uniform(-1, 1)) + "*" + dt + "+" +
              lit(o.amplitude * rng.uniform(-1, 1)) + "*sin(" + lit(rng.uniform(0.5, 4)) + "*" +
              dt + ")";
        }
        seg.entries.push_back(parse(e));
      }
    out.push_back(std::move(seg));
  }
  return MatrixTrajectory(n, std::move(out), o.periodic ? std::optional<double>(T) : std::nullopt);
}

/// gamma(t) = s (1 + sin(w t)) / 2 with an explicit g = gamma(t) R x for a
/// fixed rotation R, so |g| = gamma |x| exactly (n = 2), or g = gamma x.
/// With a period, w is a multiple of 2 pi / period so gamma shares it.
inline PerturbationModel random_perturbation(Rng& rng, int n, double scale,
                                             std::optional<double> period = std::nullopt) {
  PerturbationModel p;
  const double s = scale * rng.uniform(0.0, 1.0);
  const double w = period ? 2.0 * std::numbers::pi * rng.integer(1, 3) / *period
                          : rng.uniform(0.5, 3.0);
  const std::string gamma = lit(0.5 * s) + "*(1+sin(" + lit(w) + "*t))";
  p.gamma = parse(gamma);
  std::vector<Expression> g;
  if (n == 2) {
    const double th = rng.uniform(0, 6.28);
    const std::string c = lit(std::cos(th)), sn = lit(std::sin(th));
    g.push_back(parse("(" + gamma + ")*(" + c + "*x1-" + sn + "*x2)", 2));
    g.push_back(parse("(" + gamma + ")*(" + sn + "*x1+" + c + "*x2)", 2));
  } else {
    for (int i = 1; i <= n; ++i) g.push_back(parse("(" + gamma + ")*x" + std::to_string(i), n));
  }
  p.g = std::move(g);
  return p;
}

struct TwoModeInstance {
  std::vector<Matrix> modes;  // modes[0] stable, modes[1] unstable
  SwitchingSchedule schedule;
  double kappa_s = 1.0;
  double kappa_u = 0.5;
};

/// Two modes: alpha(A_0) <= -kappa_s and -kappa_s < alpha(A_1) <= kappa_u,
/// with a random schedule of 1..6 switches on [0, horizon).
inline TwoModeInstance random_two_mode(Rng& rng, int n, double unstable_fraction_hint) {
  TwoModeInstance inst;
  inst.kappa_s = rng.uniform(0.5, 1.5);
  inst.kappa_u = rng.uniform(0.1, 1.0);
  inst.modes.push_back(random_hurwitz(rng, n, inst.kappa_s + rng.uniform(0.0, 1.0)));
  inst.modes.push_back(random_hurwitz(rng, n, -rng.uniform(-inst.kappa_s * 0.9, inst.kappa_u)));
  SwitchingSchedule& s = inst.schedule;
  s.horizon = rng.uniform(2.0, 10.0);
  s.periodic = rng.coin(0.5);
  const int k = rng.integer(1, 6);
  for (int i = 0; i < k; ++i) s.switch_times.push_back(rng.uniform(0.02, 0.98) * s.horizon);
  std::sort(s.switch_times.begin(), s.switch_times.end());
  s.switch_times.erase(std::unique(s.switch_times.begin(), s.switch_times.end(),
                                   [](double a, double b) { return b - a < 1e-3; }),
                       s.switch_times.end());
  int mode = rng.coin(unstable_fraction_hint) ? 1 : 0;
  for (std::size_t i = 0; i <= s.switch_times.size(); ++i) {
    s.modes.push_back(mode);
    mode = 1 - mode;
  }
  return inst;
}

}  // namespace ltvtest
