#pragma once

// Fixed-step RK4 integration of x' = A(t) x + g(t, x) with steps split at
// every segment boundary and phi kink, plus the W = U V monitor and the ISS
// envelope check along a computed trace.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ltvcert/certify.hpp"
#include "ltvcert/errors.hpp"
#include "ltvcert/linalg.hpp"
#include "ltvcert/lyapunov.hpp"
#include "ltvcert/perturbation.hpp"
#include "ltvcert/trajectory.hpp"
#include "ltvcert/variation.hpp"

namespace ltvcert {

/// A state sample. Boundaries produce two samples with the same time and
/// state: the last of the incoming piece (post = false, A is the left
/// limit) and the first of the outgoing piece.
struct SimSample {
  double t = 0.0;
  Vector x;
  bool post = true;
  std::size_t segment = 0;
  double local = 0.0;
};

struct SimulationTrace {
  int dimension = 0;
  double t0 = 0.0;
  double tf = 0.0;
  double step = 0.0;
  /// True when no explicit g was given and g = 0 was simulated.
  bool nominal = false;
  std::vector<SimSample> samples;
};

struct SimulationOptions {
  double step = 1e-3;
  /// When set, phi_kappa kinks are also step boundaries.
  std::optional<double> kappa;
  double blowup_norm = 1e12;
};

inline constexpr double kEnvelopeTolerance = 1e-12;

inline SimulationTrace integrate(const MatrixTrajectory& traj, const PerturbationModel& pert,
                                 const Vector& x0, double t0, double tf,
                                 const SimulationOptions& opt = {}) {
  if (!(opt.step > 0.0)) throw InvalidArgument("step must be positive");
  if (!(tf > t0)) throw InvalidArgument("simulation requires t0 < tf");
  if (x0.size() != traj.dimension())
    throw InvalidArgument("x0 has " + std::to_string(x0.size()) + " components, expected " +
                          std::to_string(traj.dimension()));
  if (!x0.allFinite()) throw InvalidArgument("x0 must be finite");
  SimulationTrace tr;
  tr.dimension = traj.dimension();
  tr.t0 = t0;
  tr.tf = tf;
  tr.step = opt.step;
  tr.nominal = !pert.has_explicit_g();

  const std::vector<Piece> pieces = opt.kappa
                                        ? detail::smooth_pieces(traj, *opt.kappa, t0, tf, {})
                                        : traj.pieces(t0, tf);

  auto check_envelope = [&](double t, const Vector& x) {
    if (!pert.has_explicit_g()) return;
    const double lhs = pert.g_at(t, x).norm();
    const double rhs = pert.gamma_at(t) * x.norm() + pert.delta_at(t);
    if (lhs > rhs + kEnvelopeTolerance * (1.0 + rhs))
      throw ModelInconsistencyError("|g(t,x)| = " + std::to_string(lhs) +
                                    " exceeds gamma|x| + delta = " + std::to_string(rhs) +
                                    " at t = " + std::to_string(t));
  };
  auto check_blowup = [&](double t, const Vector& x) {
    if (!x.allFinite() || x.norm() > opt.blowup_norm)
      throw BlowUpError("state norm exceeded " + std::to_string(opt.blowup_norm) +
                            " at t = " + std::to_string(t),
                        t);
  };

  Vector x = x0;
  check_envelope(t0, x);
  for (std::size_t j = 0; j < pieces.size(); ++j) {
    const Piece& p = pieces[j];
    auto f = [&](double tau, const Vector& y) -> Vector {
      return traj.segment_value(p.segment, tau) * y + pert.g_at(p.offset + tau, y);
    };
    const double t_first = j == 0 ? t0 : p.global_start();
    tr.samples.push_back({t_first, x, true, p.segment, p.local_start});
    const double len = p.local_end - p.local_start;
    const int n = std::max(1, static_cast<int>(std::ceil(len / opt.step - 1e-9)));
    double tau = p.local_start;
    for (int k = 1; k <= n; ++k) {
      const double next = k == n ? p.local_end : p.local_start + len * k / n;
      const double h = next - tau;
      const Vector k1 = f(tau, x);
      const Vector k2 = f(tau + 0.5 * h, x + 0.5 * h * k1);
      const Vector k3 = f(tau + 0.5 * h, x + 0.5 * h * k2);
      const Vector k4 = f(next, x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      tau = next;
      const double t = k == n ? (j + 1 == pieces.size() ? tf : p.global_end()) : p.offset + tau;
      check_blowup(t, x);
      check_envelope(t, x);
      tr.samples.push_back({t, x, k != n, p.segment, tau});
    }
  }
  return tr;
}

struct MonitorViolation {
  double t = 0.0;
  std::string kind;  // "flow", "jump", "sandwich", "xi"
  std::string message;
};

struct MonitorReport {
  std::vector<double> V, U, W, xi;
  bool ok = true;
  std::optional<MonitorViolation> first_violation;
  std::size_t flow_checks = 0;
  std::size_t jump_checks = 0;
};

/// Flow-check slack on the decay rate a.
inline constexpr double kFlowRateFactor = 0.95;
inline constexpr double kJumpTolerance = 1e-9;

/// Recomputes P(t), xi(t) and W = exp(2 xi / c1) x^T P x along the trace and
/// checks the decay between samples, non-increase across jumps, and the
/// sandwich c1 |x|^2 <= W <= c2 exp(2 rho / c1) |x|^2.
inline MonitorReport monitor_W(const SimulationTrace& tr, const MatrixTrajectory& traj,
                               const PerturbationModel& pert, const Certificate& cert) {
  if (!cert.feasible || !cert.iss) throw InvalidArgument("monitor_W requires a feasible certificate");
  const double c1 = cert.constants.c1, c2 = cert.constants.c2;
  const double a = cert.iss->a, b = cert.iss->b;
  const CriterionEvaluator ev(traj, pert, cert.kappa, c1, c2);
  ProfileOptions popt;
  std::vector<double> times;
  for (const SimSample& s : tr.samples) times.push_back(s.t);
  popt.times = times;
  const CumulativeProfile prof = build_profile(ev, tr.t0, tr.tf, popt);
  const XiProfile xi = xi_profile(prof, cert.lambda, cert.rho);

  MonitorReport rep;
  const std::size_t m = tr.samples.size();
  rep.V.resize(m);
  rep.U.resize(m);
  rep.W.resize(m);
  rep.xi.resize(m);
  auto flag = [&](double t, const char* kind, std::string msg) {
    if (rep.ok) rep.first_violation = MonitorViolation{t, kind, std::move(msg)};
    rep.ok = false;
  };
  for (std::size_t i = 0; i < m; ++i) {
    const SimSample& s = tr.samples[i];
    const Matrix atil = shift_matrix(traj.segment_value(s.segment, s.local), cert.kappa);
    const Matrix P = solve_lyapunov(atil).P;
    rep.V[i] = s.x.dot(P * s.x);
    auto it = std::lower_bound(prof.samples.begin(), prof.samples.end(), s.t,
                               [](const ProfileSample& ps, double v) { return ps.t < v; });
    std::size_t k = static_cast<std::size_t>(it - prof.samples.begin());
    if (k == prof.samples.size() ||
        (k > 0 && std::fabs(prof.samples[k - 1].t - s.t) < std::fabs(prof.samples[k].t - s.t)))
      --k;
    rep.xi[i] = s.post ? xi.samples[k].xi_post : xi.samples[k].xi_pre;
    if (i == 0) rep.xi[i] = xi.samples[k].xi_post;
    rep.U[i] = std::exp(2.0 * rep.xi[i] / c1);
    rep.W[i] = rep.U[i] * rep.V[i];
    if (rep.xi[i] < -1e-9 || rep.xi[i] > cert.rho + 1e-9)
      flag(s.t, "xi", "xi = " + std::to_string(rep.xi[i]) + " outside [0, rho]");
    const double nx2 = s.x.squaredNorm();
    const double upper = c2 * std::exp(2.0 * cert.rho / c1) * nx2;
    if (rep.W[i] < c1 * nx2 * (1.0 - 1e-9) || rep.W[i] > upper * (1.0 + 1e-9))
      flag(s.t, "sandwich", "W = " + std::to_string(rep.W[i]) + " outside [c1|x|^2, " +
                                std::to_string(upper) + "]");
    if (i == 0) continue;
    const double h = s.t - tr.samples[i - 1].t;
    const double w0 = rep.W[i - 1];
    if (h <= 0.0) {
      rep.jump_checks += 1;
      if (rep.W[i] > w0 * (1.0 + kJumpTolerance))
        flag(s.t, "jump", "W increased across a jump from " + std::to_string(w0) + " to " +
                              std::to_string(rep.W[i]));
      continue;
    }
    rep.flow_checks += 1;
    const double dmax = std::max(pert.delta_at(s.t), pert.delta_at(tr.samples[i - 1].t));
    const double bound = std::exp(-kFlowRateFactor * a * h) * w0 +
                         b / a * (1.0 - std::exp(-a * h)) * dmax * dmax + 1e-12 * w0;
    if (rep.W[i] > bound)
      flag(s.t, "flow", "W = " + std::to_string(rep.W[i]) + " exceeds the decay bound " +
                            std::to_string(bound));
  }
  return rep;
}

struct IssReport {
  std::vector<double> envelope;
  double min_margin = 0.0;  // min over samples of envelope - |x|
  bool ok = true;
  std::optional<double> first_violation_t;
};

inline constexpr double kIssTolerance = 1e-6;

/// |x(t)| <= k1 exp(-k2 (t - t0)) |x0| + k3 max_{[t0, t]} delta at every
/// sample; the maximum of delta is the running maximum over sample times.
inline IssReport verify_iss(const SimulationTrace& tr, const Certificate& cert,
                            const PerturbationModel& pert) {
  if (!cert.feasible || !cert.iss) throw InvalidArgument("verify_iss requires a feasible certificate");
  IssReport rep;
  const double nx0 = tr.samples.front().x.norm();
  double dmax = 0.0;
  rep.min_margin = kInfeasible;
  for (const SimSample& s : tr.samples) {
    dmax = std::max(dmax, pert.delta_at(s.t));
    const double env = cert.iss->k1 * std::exp(-cert.iss->k2 * (s.t - tr.t0)) * nx0 +
                       cert.iss->k3 * dmax;
    rep.envelope.push_back(env);
    const double nx = s.x.norm();
    rep.min_margin = std::min(rep.min_margin, env - nx);
    if (nx > env * (1.0 + kIssTolerance) && rep.ok) {
      rep.ok = false;
      rep.first_violation_t = s.t;
    }
  }
  return rep;
}

namespace detail {
inline void put_number(std::ostream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}
}  // namespace detail

/// CSV with columns t, x1..xn, norm_x, V, W, xi, envelope; values that were
/// not computed are written as nan.
inline void write_trace_csv(std::ostream& os, const SimulationTrace& tr,
                            const MonitorReport* mon = nullptr,
                            const IssReport* iss = nullptr) {
  os << "t";
  for (int i = 1; i <= tr.dimension; ++i) os << ",x" << i;
  os << ",norm_x,V,W,xi,envelope\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < tr.samples.size(); ++k) {
    const SimSample& s = tr.samples[k];
    detail::put_number(os, s.t);
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      os << ',';
      detail::put_number(os, s.x(i));
    }
    const double cols[] = {s.x.norm(), mon ? mon->V[k] : nan, mon ? mon->W[k] : nan,
                           mon ? mon->xi[k] : nan, iss ? iss->envelope[k] : nan};
    for (double v : cols) {
      os << ',';
      detail::put_number(os, v);
    }
    os << '\n';
  }
}

}  // namespace ltvcert
