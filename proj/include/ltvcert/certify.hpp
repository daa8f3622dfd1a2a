#pragma once

// The window criterion
//   c1 int phi + c2 int gamma + c2^2 int ||dAtil|| <= lambda (t_b - t_a) + rho,
// the smallest admissible offset rho for a slope lambda, the ISS constants
// that follow from a feasible pair, and the running quantity
//   xi(t) = inf_{s <= t} chi(s) - chi(t) + rho,   chi(t) = H(t) - lambda t.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ltvcert/errors.hpp"
#include "ltvcert/linalg.hpp"
#include "ltvcert/lyapunov.hpp"
#include "ltvcert/parallel.hpp"
#include "ltvcert/perturbation.hpp"
#include "ltvcert/quadrature.hpp"
#include "ltvcert/spectral.hpp"
#include "ltvcert/trajectory.hpp"
#include "ltvcert/variation.hpp"

namespace ltvcert {

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

/// Pointwise ingredients of the criterion along one smooth piece.
class CriterionEvaluator {
 public:
  CriterionEvaluator(const MatrixTrajectory& traj, const PerturbationModel& pert,
                     double kappa, double c1, double c2, VariationOptions opt = {})
      : traj_(&traj), pert_(&pert), kappa_(kappa), c1_(c1), c2_(c2), opt_(opt) {
    if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
    if (!(c1 > 0.0 && c2 >= c1)) throw InvalidArgument("constants must satisfy 0 < c1 <= c2");
  }

  const MatrixTrajectory& trajectory() const { return *traj_; }
  const PerturbationModel& perturbation() const { return *pert_; }
  double kappa() const { return kappa_; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }
  const VariationOptions& options() const { return opt_; }

  /// (phi, gamma, ||d/dt Atil||) at local time tau of piece p.
  std::array<double, 3> rates(const Piece& p, double tau) const {
    const double phi = detail::seg_phi(*traj_, p.segment, kappa_, tau);
    const double dphi =
        detail::seg_phi_rate(*traj_, p.segment, kappa_, tau, p.local_start, p.local_end);
    Matrix dtil = traj_->segment_derivative(p.segment, tau);
    dtil.diagonal().array() -= dphi;
    return {phi, pert_->gamma_at(p.offset + tau), op_norm(dtil)};
  }

  double combine(const std::array<double, 3>& v) const {
    return c1_ * v[0] + c2_ * v[1] + c2_ * c2_ * v[2];
  }

  double density(const Piece& p, double tau) const { return combine(rates(p, tau)); }

  /// Integrals of the three rates over local [lo, hi] within piece p.
  std::array<double, 3> increment(const Piece& p, double lo, double hi, double tol,
                                  double* err = nullptr, bool* converged = nullptr) const {
    double e = 0.0;
    bool ok = true;
    auto out = detail::joint_simpson<3>([&](double tau) { return rates(p, tau); }, lo, hi,
                                        tol, opt_.max_depth, e, ok);
    if (err) *err += e;
    if (converged) *converged = *converged && ok;
    return out;
  }

  /// ||Atil(t) - Atil(t^-)|| at a jump boundary.
  double jump_mass(const MatrixTrajectory::Boundary& b) const {
    const Matrix right = shift_matrix(traj_->segment_value(b.outgoing, b.local_out), kappa_);
    const Matrix left = shift_matrix(traj_->segment_value(b.incoming, b.local_in), kappa_);
    return op_norm(right - left);
  }

 private:
  const MatrixTrajectory* traj_;
  const PerturbationModel* pert_;
  double kappa_;
  double c1_;
  double c2_;
  VariationOptions opt_;
};

struct LhsBreakdown {
  double int_phi = 0.0;
  double int_gamma = 0.0;
  double tv_tilde = 0.0;
  double value = 0.0;
  VariationBreakdown tilde;
};

/// Left-hand side of the criterion over the window (t_a, t_b].
inline LhsBreakdown lhs(const MatrixTrajectory& traj, const PerturbationModel& pert,
                        double kappa, const ConstantsBundle& k, double t_a, double t_b,
                        const VariationOptions& opt = {}) {
  if (!(t_b > t_a)) throw InvalidArgument("lhs: window requires t_a < t_b");
  LhsBreakdown out;
  out.tilde = variation_triple(traj, kappa, t_a, t_b, opt).tilde;
  out.tv_tilde = out.tilde.total;
  const AdaptiveSimpson quad(1e-10, opt.max_depth);
  for (const Piece& p : detail::smooth_pieces(traj, kappa, t_a, t_b, opt)) {
    out.int_phi += quad.integrate(
        [&](double tau) { return detail::seg_phi(traj, p.segment, kappa, tau); },
        p.local_start, p.local_end).value;
    out.int_gamma += quad.integrate([&](double tau) { return pert.gamma_at(p.offset + tau); },
                                    p.local_start, p.local_end).value;
  }
  out.value = k.c1 * out.int_phi + k.c2 * out.int_gamma + k.c2 * k.c2 * out.tv_tilde;
  return out;
}

/// Slope bound c1/(2 c2) on lambda.
inline double lambda_bound(const ConstantsBundle& k) {
  if (!(k.c1 > 0.0 && k.c2 > 0.0)) throw InvalidArgument("constants must be positive");
  return k.c1 / (2.0 * k.c2);
}

struct ProfileSample {
  double t = 0.0;
  double H_pre = 0.0;   // H(t^-)
  double H_post = 0.0;  // H(t), jump mass at t included
  /// Cumulative int phi, int gamma, int ||dAtil|| (jumps included) at t.
  std::array<double, 3> parts{};
};

/// H(t) on [t_start, t_end], sampled at every smooth-piece boundary (segment
/// boundaries, jumps, phi kinks) plus a uniform or caller-supplied grid.
/// H(t_start) = 0; a jump at t_start is outside the window.
struct CumulativeProfile {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<ProfileSample> samples;
  // Interval k is [samples[k].t, samples[k+1].t] inside piece interval_piece[k].
  std::vector<std::size_t> interval_piece;
  std::vector<std::array<double, 2>> interval_local;  // local [lo, hi]
  std::vector<std::array<double, 2>> interval_density;  // density at lo+, hi-
  std::vector<Piece> pieces;
  double quadrature_error = 0.0;
  bool converged = true;
  std::optional<CriterionEvaluator> evaluator;

  /// H over (t_start, t], evaluated at the sample nearest to t.
  const ProfileSample& sample_near(double t) const {
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const ProfileSample& s, double v) { return s.t < v; });
    if (it == samples.end()) return samples.back();
    if (it != samples.begin() && std::fabs((it - 1)->t - t) < std::fabs(it->t - t)) --it;
    return *it;
  }
};

struct ProfileOptions {
  int min_points = 512;
  /// If set, these times (inside the window) replace the uniform grid.
  std::optional<std::vector<double>> times;
  double interval_tolerance = 1e-11;
};

inline CumulativeProfile build_profile(const CriterionEvaluator& ev, double t_start,
                                       double t_end, const ProfileOptions& popt = {}) {
  if (!(t_end > t_start)) throw InvalidArgument("profile window requires t_start < t_end");
  if (popt.min_points < 1) throw InvalidArgument("profile needs at least one point");
  const MatrixTrajectory& traj = ev.trajectory();
  CumulativeProfile prof;
  prof.t_start = t_start;
  prof.t_end = t_end;
  prof.evaluator = ev;
  prof.pieces = detail::smooth_pieces(traj, ev.kappa(), t_start, t_end, ev.options());

  struct Jump {
    double time;
    double mass;
    bool used;
  };
  std::vector<Jump> jumps;
  for (const auto& b : traj.boundaries(t_start, t_end))
    if (b.is_jump) jumps.push_back({b.time, ev.jump_mass(b), false});

  // Sample times as (piece, local) with the piece start shared with the
  // previous piece's end.
  std::vector<double> grid_times;
  if (popt.times) {
    grid_times = *popt.times;
    std::sort(grid_times.begin(), grid_times.end());
  }
  const double h = (t_end - t_start) / popt.min_points;
  std::vector<std::size_t> ipiece;
  std::vector<std::array<double, 2>> ilocal;
  std::vector<double> times{t_start};
  std::vector<std::size_t> piece_first_interval;
  for (std::size_t j = 0; j < prof.pieces.size(); ++j) {
    const Piece& p = prof.pieces[j];
    piece_first_interval.push_back(ilocal.size());
    std::vector<double> locals{p.local_start};
    const double len = p.local_end - p.local_start;
    const double merge = 1e-12 * std::max(1.0, std::fabs(p.global_end()));
    if (popt.times) {
      auto lo = std::upper_bound(grid_times.begin(), grid_times.end(), p.global_start());
      for (auto it = lo; it != grid_times.end() && *it < p.global_end(); ++it) {
        const double tau = *it - p.offset;
        if (tau - locals.back() > merge && p.local_end - tau > merge) locals.push_back(tau);
      }
    } else {
      const int n = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
      for (int k = 1; k < n; ++k) locals.push_back(p.local_start + len * k / n);
    }
    locals.push_back(p.local_end);
    for (std::size_t k = 1; k < locals.size(); ++k) {
      ipiece.push_back(j);
      ilocal.push_back({locals[k - 1], locals[k]});
      times.push_back(k + 1 == locals.size() ? p.global_end() : p.offset + locals[k]);
    }
  }

  const std::size_t m = ilocal.size();
  std::vector<std::array<double, 3>> inc(m);
  std::vector<std::array<double, 2>> dens(m);
  std::vector<double> errs(m, 0.0);
  std::vector<char> oks(m, 1);
  parallel_for(m, [&](std::size_t k) {
    const Piece& p = prof.pieces[ipiece[k]];
    bool ok = true;
    inc[k] = ev.increment(p, ilocal[k][0], ilocal[k][1], popt.interval_tolerance, &errs[k], &ok);
    oks[k] = ok;
    dens[k] = {ev.density(p, ilocal[k][0]), ev.density(p, ilocal[k][1])};
  });

  auto take_jumps = [&](double t) {
    double mass = 0.0;
    for (Jump& jmp : jumps)
      if (!jmp.used && std::fabs(jmp.time - t) <= 1e-9 * std::max(1.0, std::fabs(t))) {
        jmp.used = true;
        mass += jmp.mass;
      }
    return mass;
  };

  const double c1 = ev.c1(), c2 = ev.c2();
  ProfileSample cur;
  cur.t = t_start;
  prof.samples.push_back(cur);
  for (std::size_t k = 0; k < m; ++k) {
    ProfileSample next = prof.samples.back();
    next.t = times[k + 1];
    for (int i = 0; i < 3; ++i) next.parts[static_cast<std::size_t>(i)] += inc[k][static_cast<std::size_t>(i)];
    next.H_pre = prof.samples.back().H_post + c1 * inc[k][0] + c2 * inc[k][1] + c2 * c2 * inc[k][2];
    const bool piece_end = k + 1 == m || ipiece[k + 1] != ipiece[k];
    const double mass = piece_end ? take_jumps(next.t) : 0.0;
    next.parts[2] += mass;
    next.H_post = next.H_pre + c2 * c2 * mass;
    prof.samples.push_back(next);
    prof.quadrature_error += errs[k];
    prof.converged = prof.converged && oks[k];
  }
  for (const Jump& jmp : jumps)
    if (!jmp.used)
      throw Error("profile: jump at t = " + std::to_string(jmp.time) +
                  " did not match a piece boundary");
  prof.interval_piece = std::move(ipiece);
  prof.interval_local = std::move(ilocal);
  prof.interval_density = std::move(dens);
  return prof;
}

/// One entry of chi = H - lambda t in time order: pre- and post-jump values
/// at every sample plus the interior critical points of chi.
struct ChiPoint {
  double t = 0.0;
  double chi = 0.0;
  std::size_t sample = 0;
  bool post = true;
  bool interior = false;
};

/// chi along the profile with interior extrema located by bisection on the
/// density sign change h - lambda inside each interval.
inline std::vector<ChiPoint> chi_sequence(const CumulativeProfile& prof, double lambda) {
  std::vector<ChiPoint> seq;
  seq.reserve(prof.samples.size() * 2 + 8);
  const std::size_t m = prof.interval_local.size();
  std::vector<std::optional<ChiPoint>> interior(m);
  const CriterionEvaluator& ev = *prof.evaluator;
  parallel_for(m, [&](std::size_t k) {
    const double g_lo = prof.interval_density[k][0] - lambda;
    const double g_hi = prof.interval_density[k][1] - lambda;
    if ((g_lo > 0.0) == (g_hi > 0.0) || g_lo == 0.0 || g_hi == 0.0) return;
    const Piece& p = prof.pieces[prof.interval_piece[k]];
    const double lo = prof.interval_local[k][0], hi = prof.interval_local[k][1];
    const double root =
        bisect_root([&](double tau) { return ev.density(p, tau) - lambda; }, lo, hi,
                    1e-13 * std::max(1.0, std::fabs(hi)));
    if (!(root > lo && root < hi)) return;
    const auto part = ev.increment(p, lo, root, 1e-12);
    const ProfileSample& s = prof.samples[k];
    const double t = p.offset + root;
    interior[k] = ChiPoint{t, s.H_post + ev.combine(part) - lambda * t, k, true, true};
  });
  for (std::size_t k = 0; k < prof.samples.size(); ++k) {
    const ProfileSample& s = prof.samples[k];
    seq.push_back({s.t, s.H_pre - lambda * s.t, k, false, false});
    seq.push_back({s.t, s.H_post - lambda * s.t, k, true, false});
    if (k < m && interior[k]) seq.push_back(*interior[k]);
  }
  return seq;
}

struct RhoResult {
  double rho = 0.0;  // kInfeasible if the per-period slope test fails
  bool feasible = true;
  double t_a = 0.0;  // worst window (t_a, t_b]
  double t_b = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  /// H over one period when the trajectory is periodic and the profile
  /// covers [0, period].
  std::optional<double> period_H;
};

/// H(period) from a profile that starts at 0 and covers a full period.
inline std::optional<double> period_total(const CumulativeProfile& prof) {
  const auto& traj = prof.evaluator->trajectory();
  if (!traj.periodic() || prof.t_start != 0.0) return std::nullopt;
  const double p = *traj.period();
  if (prof.t_end < p * (1.0 - 1e-12)) return std::nullopt;
  const ProfileSample& s = prof.sample_near(p);
  if (std::fabs(s.t - p) > 1e-9 * std::max(1.0, p)) return std::nullopt;
  return s.H_post;
}

/// Smallest rho such that every window inside the profile satisfies
/// H(t_b) - H(t_a) <= lambda (t_b - t_a) + rho. For a periodic trajectory
/// whose per-period total exceeds lambda * period no finite rho exists.
inline RhoResult min_rho(const CumulativeProfile& prof, double lambda) {
  RhoResult r;
  r.period_H = period_total(prof);
  if (r.period_H) {
    const double p = *prof.evaluator->trajectory().period();
    if (*r.period_H > lambda * p) {
      r.rho = kInfeasible;
      r.feasible = false;
      r.t_a = 0.0;
      r.t_b = p;
      r.lhs = *r.period_H;
      r.rhs = lambda * p;
      return r;
    }
  }
  const auto seq = chi_sequence(prof, lambda);
  double run_min = seq.front().chi;
  double run_min_t = seq.front().t;
  double best = 0.0;
  r.t_a = r.t_b = seq.front().t;
  for (const ChiPoint& c : seq) {
    if (c.chi - run_min > best) {
      best = c.chi - run_min;
      r.t_a = run_min_t;
      r.t_b = c.t;
    }
    if (c.chi < run_min) {
      run_min = c.chi;
      run_min_t = c.t;
    }
  }
  r.rho = best;
  r.rhs = lambda * (r.t_b - r.t_a);
  r.lhs = best + r.rhs;
  return r;
}

/// Default certification horizon: two periods, or the defined horizon.
inline double default_certification_horizon(const MatrixTrajectory& traj) {
  return traj.periodic() ? 2.0 * *traj.period() : traj.horizon();
}

inline RhoResult min_rho(const MatrixTrajectory& traj, const PerturbationModel& pert,
                         double kappa, const ConstantsBundle& k, double lambda,
                         std::optional<double> horizon = std::nullopt,
                         const ProfileOptions& popt = {}) {
  const CriterionEvaluator ev(traj, pert, kappa, k.c1, k.c2);
  const double hz = horizon.value_or(default_certification_horizon(traj));
  return min_rho(build_profile(ev, 0.0, hz, popt), lambda);
}

struct CertificateParams {
  double kappa = 0.0;
  double lambda = 0.0;
  double rho = 0.0;
  double epsilon = 0.0;
  ConstantsBundle constants;
};

struct IssConstants {
  double a = 0.0;
  double b = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
};

/// Midpoint of the admissible interval (0, c1/c2 - 2 lambda).
inline double default_epsilon(const ConstantsBundle& k, double lambda) {
  return 0.5 * (k.c1 / k.c2 - 2.0 * lambda);
}

inline IssConstants iss_constants(const CertificateParams& p) {
  const double c1 = p.constants.c1, c2 = p.constants.c2;
  if (!(c1 > 0.0 && c2 >= c1)) throw InvalidArgument("constants must satisfy 0 < c1 <= c2");
  if (!(p.lambda >= 0.0 && p.lambda < lambda_bound(p.constants)))
    throw InvalidArgument("lambda must lie in [0, c1/(2 c2))");
  if (!(p.rho >= 0.0 && std::isfinite(p.rho))) throw InvalidArgument("rho must be finite and >= 0");
  const double eps_max = c1 / c2 - 2.0 * p.lambda;
  if (!(p.epsilon > 0.0 && p.epsilon < eps_max))
    throw InvalidArgument("epsilon must lie in (0, c1/c2 - 2 lambda)");
  IssConstants r;
  r.a = 1.0 / c2 - (2.0 * p.lambda + p.epsilon) / c1;
  r.b = c2 * c2 / p.epsilon * std::exp(2.0 * p.rho / c1);
  r.k1 = std::sqrt(c2 / c1) * std::exp(p.rho / c1);
  r.k2 = r.a / 2.0;
  // |x| <= sqrt(W / c1) applies to both terms of the W bound, so the gain
  // carries the 1/c1 factor as well.
  r.k3 = std::sqrt(r.b / (r.a * c1));
  if (!(r.a > 0.0 && r.k2 > 0.0 && std::isfinite(r.k1) && std::isfinite(r.k3)))
    throw InvalidArgument("ISS constants are degenerate for these parameters");
  return r;
}

/// True when the ISS constants for (lambda, rho) with the default epsilon
/// are finite in double precision.
inline bool iss_representable(const ConstantsBundle& k, double lambda, double rho) {
  if (!std::isfinite(rho)) return false;
  try {
    iss_constants({k.kappa, lambda, rho, default_epsilon(k, lambda), k});
    return true;
  } catch (const InvalidArgument&) {
    return false;
  }
}

struct WindowSummary {
  double t_a = 0.0;
  double t_b = 0.0;
  double int_phi = 0.0;
  double int_gamma = 0.0;
  double tv_tilde = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct Certificate {
  bool feasible = false;
  double kappa = 0.0;
  double lambda = 0.0;
  double rho = kInfeasible;
  double epsilon = 0.0;
  ConstantsBundle constants;
  std::optional<IssConstants> iss;
  /// Certified scope (t0, T]; for periodic systems the bound extends to all
  /// windows.
  double t0 = 0.0;
  double T = 0.0;
  bool periodic = false;
  bool lambda_scanned = false;
  WindowSummary worst_window;
  /// The window (0, period] or (0, T_def].
  WindowSummary base_window;
  std::vector<std::string> notes;
};

struct CertifyOptions {
  std::optional<double> lambda;
  std::optional<double> rho;
  std::optional<double> horizon;
  int min_points = 512;
  int lambda_iterations = 64;
};

inline Certificate certify(const MatrixTrajectory& traj, const PerturbationModel& pert,
                           double kappa, const ConstantsBundle& k,
                           const CertifyOptions& opt = {}) {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  const double lmax = lambda_bound(k);
  const double hz = opt.horizon.value_or(default_certification_horizon(traj));
  if (!(hz > 0.0)) throw InvalidArgument("horizon must be positive");
  if (opt.rho && !(*opt.rho >= 0.0)) throw InvalidArgument("rho must be >= 0");
  const CriterionEvaluator ev(traj, pert, kappa, k.c1, k.c2);
  ProfileOptions popt;
  popt.min_points = std::max(1, static_cast<int>(std::ceil(
                                    opt.min_points * hz / traj.period().value_or(hz))));
  const CumulativeProfile prof = build_profile(ev, 0.0, hz, popt);

  Certificate cert;
  cert.kappa = kappa;
  cert.constants = k;
  cert.t0 = 0.0;
  cert.T = hz;
  cert.periodic = traj.periodic();

  const double base_end = std::min(hz, traj.period().value_or(traj.horizon()));
  const LhsBreakdown base = lhs(traj, pert, kappa, k, 0.0, base_end);
  cert.base_window = {0.0, base_end, base.int_phi, base.int_gamma, base.tv_tilde,
                      base.value, 0.0};

  auto evaluate = [&](double lambda) { return min_rho(prof, lambda); };
  RhoResult chosen;
  if (opt.lambda) {
    if (!(*opt.lambda >= 0.0 && *opt.lambda < lmax))
      throw InvalidArgument("lambda must lie in [0, c1/(2 c2)) = [0, " + std::to_string(lmax) + ")");
    cert.lambda = *opt.lambda;
    chosen = evaluate(cert.lambda);
  } else {
    // Golden-section search on (0, lmax): feasible points score k2 (which
    // decreases in lambda), infeasible ones minus their slope excess.
    cert.lambda_scanned = true;
    const double per = traj.period().value_or(hz);
    // Feasible points whose offset overflows the ISS constants sit between
    // the two regimes with a tiny negative score rising toward lmax.
    auto score = [&](double lambda, RhoResult& rr) {
      rr = evaluate(lambda);
      if (rr.feasible && iss_representable(k, lambda, rr.rho))
        return 0.5 * (1.0 / (2.0 * k.c2) - lambda / k.c1);
      if (rr.feasible) return -1e-9 * (lmax - lambda) / lmax;
      return -(rr.period_H.value_or(0.0) / per - lambda);
    };
    constexpr double kInvPhi = 0.6180339887498949;
    double lo = 0.0, hi = lmax;
    double x1 = hi - kInvPhi * (hi - lo), x2 = lo + kInvPhi * (hi - lo);
    RhoResult r1, r2;
    double f1 = score(x1, r1), f2 = score(x2, r2);
    std::optional<std::pair<double, RhoResult>> best_feasible;
    double best_score = -kInfeasible;
    std::pair<double, RhoResult> best_any{x1, r1};
    auto consider = [&](double x, double f, const RhoResult& rr) {
      if (rr.feasible && (!best_feasible || f > best_score)) {
        best_feasible = {x, rr};
        best_score = f;
      }
      if (!best_feasible && (f > -kInfeasible)) best_any = {x, rr};
    };
    consider(x1, f1, r1);
    consider(x2, f2, r2);
    for (int it = 0; it < opt.lambda_iterations; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        r1 = r2;
        x2 = lo + kInvPhi * (hi - lo);
        f2 = score(x2, r2);
        consider(x2, f2, r2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        r2 = r1;
        x1 = hi - kInvPhi * (hi - lo);
        f1 = score(x1, r1);
        consider(x1, f1, r1);
      }
    }
    if (best_feasible) {
      cert.lambda = best_feasible->first;
      chosen = best_feasible->second;
    } else {
      cert.lambda = best_any.first;
      chosen = best_any.second;
    }
  }

  cert.base_window.rhs = cert.lambda * base_end;
  cert.worst_window = {chosen.t_a, chosen.t_b, 0.0, 0.0, 0.0, chosen.lhs, chosen.rhs};
  cert.feasible = chosen.feasible;
  cert.rho = chosen.rho;
  if (cert.feasible && opt.rho) {
    if (chosen.rho > *opt.rho) {
      cert.feasible = false;
      cert.notes.push_back("requested rho " + std::to_string(*opt.rho) +
                           " is below the minimal offset " + std::to_string(chosen.rho));
    }
    cert.rho = *opt.rho;
  }
  if (!prof.converged) cert.notes.push_back("criterion quadrature did not converge everywhere");
  if (traj.periodic()) {
    const double p = *traj.period();
    bool periodic_pert = true;
    for (int i = 0; i < 64 && periodic_pert; ++i) {
      const double t = p * i / 64.0;
      const double tol = 1e-9 * (1.0 + std::fabs(pert.gamma_at(t)) + std::fabs(pert.delta_at(t)));
      periodic_pert = std::fabs(pert.gamma_at(t + p) - pert.gamma_at(t)) <= tol &&
                      std::fabs(pert.delta_at(t + p) - pert.delta_at(t)) <= tol;
    }
    if (!periodic_pert)
      cert.notes.push_back("gamma or delta is not periodic with the matrix period; "
                           "the certificate covers only the computed horizon");
  } else {
    cert.notes.push_back("aperiodic trajectory: certified on (0, T_def] only");
  }
  if (cert.feasible) {
    CertificateParams params{kappa, cert.lambda, cert.rho, default_epsilon(k, cert.lambda), k};
    cert.epsilon = params.epsilon;
    if (iss_representable(k, cert.lambda, cert.rho)) {
      cert.iss = iss_constants(params);
      if (cert.iss->a < 1e-3 / k.c2)
        cert.notes.push_back("decay margin a is near-degenerate");
    } else {
      cert.notes.push_back("rho / c1 = " + std::to_string(cert.rho / k.c1) +
                           " overflows the ISS constants; no envelope is reported");
    }
  }
  return cert;
}

struct XiSample {
  double t = 0.0;
  double xi_pre = 0.0;
  double xi_post = 0.0;
};

struct XiProfile {
  std::vector<XiSample> samples;
  double min_xi = 0.0;
  double max_xi = 0.0;
  bool violation = false;
  double first_violation_t = 0.0;
};

/// xi at every profile sample, with the running infimum taken over the
/// refined chi sequence.
inline XiProfile xi_profile(const CumulativeProfile& prof, double lambda, double rho) {
  if (!(rho >= 0.0 && std::isfinite(rho))) throw InvalidArgument("rho must be finite and >= 0");
  XiProfile out;
  out.samples.resize(prof.samples.size());
  const auto seq = chi_sequence(prof, lambda);
  double run_min = kInfeasible;
  out.min_xi = kInfeasible;
  out.max_xi = -kInfeasible;
  for (const ChiPoint& c : seq) {
    run_min = std::min(run_min, c.chi);
    if (c.interior) continue;
    const double xi = run_min - c.chi + rho;
    XiSample& s = out.samples[c.sample];
    s.t = c.t;
    (c.post ? s.xi_post : s.xi_pre) = xi;
    out.min_xi = std::min(out.min_xi, xi);
    out.max_xi = std::max(out.max_xi, xi);
    if (!out.violation && (xi < -1e-9 || xi > rho + 1e-9)) {
      out.violation = true;
      out.first_violation_t = c.t;
    }
  }
  return out;
}

// Switched systems: piecewise-constant A(t) = A_{sigma(t)}.

struct SwitchingSchedule {
  std::vector<double> switch_times;  // strictly increasing, inside (0, horizon)
  std::vector<int> modes;            // active mode on each interval
  double horizon = 0.0;
  bool periodic = false;
};

inline void validate_schedule(const std::vector<Matrix>& modes, const SwitchingSchedule& s) {
  if (modes.empty()) throw InvalidArgument("at least one mode is required");
  if (!(s.horizon > 0.0)) throw InvalidArgument("schedule horizon must be positive");
  if (s.modes.size() != s.switch_times.size() + 1)
    throw InvalidArgument("schedule needs one mode per interval");
  double prev = 0.0;
  for (double t : s.switch_times) {
    if (!(t > prev && t < s.horizon))
      throw InvalidArgument("switch times must increase strictly inside (0, horizon)");
    prev = t;
  }
  for (int m : s.modes)
    if (m < 0 || static_cast<std::size_t>(m) >= modes.size())
      throw InvalidArgument("schedule refers to an unknown mode " + std::to_string(m));
  for (const Matrix& a : modes)
    if (a.rows() != modes.front().rows() || a.cols() != a.rows())
      throw InvalidArgument("modes must be square and of equal size");
}

inline MatrixTrajectory switched_trajectory(const std::vector<Matrix>& modes,
                                            const SwitchingSchedule& s) {
  validate_schedule(modes, s);
  const int n = static_cast<int>(modes.front().rows());
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < s.modes.size(); ++i) {
    Segment seg;
    seg.t_start = i == 0 ? 0.0 : s.switch_times[i - 1];
    seg.t_end = i == s.switch_times.size() ? s.horizon : s.switch_times[i];
    const Matrix& a = modes[static_cast<std::size_t>(s.modes[i])];
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) seg.entries.push_back(Expression::constant(a(r, c)));
    segs.push_back(std::move(seg));
  }
  return MatrixTrajectory(n, std::move(segs),
                          s.periodic ? std::optional<double>(s.horizon) : std::nullopt);
}

struct SwitchedResult {
  bool holds = false;
  double lhs = 0.0;          // with k_eff
  double lhs_literal = 0.0;  // with k = max ||A_i - A_j||
  double rhs = 0.0;
  double k = 0.0;
  double k_eff = 0.0;
  double unstable_time = 0.0;
  int switch_count = 0;
  std::vector<bool> unstable;  // per mode
};

/// Activation-time and switch-count bound for a switched path: modes with
/// alpha <= -kappa_s are stable, modes with alpha <= kappa_u unstable. The
/// jump term uses k_eff = max(k, max ||Atil_i - Atil_j||) because a jump of
/// the shifted path can exceed the jump of A itself.
inline SwitchedResult switched_condition(const std::vector<Matrix>& modes,
                                         const SwitchingSchedule& s, double kappa_s,
                                         double kappa_u, const ConstantsBundle& k,
                                         double lambda, double rho, double t_a, double t_b) {
  validate_schedule(modes, s);
  if (!(kappa_s > 0.0)) throw InvalidArgument("kappa_s must be positive");
  if (!(kappa_u >= 0.0)) throw InvalidArgument("kappa_u must be >= 0");
  if (!(t_b > t_a && t_a >= 0.0)) throw InvalidArgument("window requires 0 <= t_a < t_b");
  if (!s.periodic && t_b > s.horizon) throw DomainError("window exceeds the schedule horizon");
  SwitchedResult r;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double a = abscissa(modes[i]);
    if (a <= -kappa_s) {
      r.unstable.push_back(false);
    } else if (a <= kappa_u) {
      r.unstable.push_back(true);
    } else {
      throw DomainError("mode " + std::to_string(i) + " has abscissa " + std::to_string(a) +
                        " above kappa_u");
    }
  }
  for (std::size_t i = 0; i < modes.size(); ++i)
    for (std::size_t j = i + 1; j < modes.size(); ++j) {
      r.k = std::max(r.k, op_norm(modes[i] - modes[j]));
      r.k_eff = std::max(r.k_eff, op_norm(shift_matrix(modes[i], kappa_s) -
                                          shift_matrix(modes[j], kappa_s)));
    }
  r.k_eff = std::max(r.k_eff, r.k);

  // Walk the (periodically extended) schedule over [t_a, t_b].
  const double per = s.horizon;
  const long first = s.periodic ? static_cast<long>(std::floor(t_a / per)) : 0;
  const long last = s.periodic ? static_cast<long>(std::floor(t_b / per)) : 0;
  for (long rep = first; rep <= last; ++rep) {
    const double off = static_cast<double>(rep) * per;
    for (std::size_t i = 0; i < s.modes.size(); ++i) {
      const double lo = off + (i == 0 ? 0.0 : s.switch_times[i - 1]);
      const double hi = off + (i == s.switch_times.size() ? per : s.switch_times[i]);
      if (r.unstable[static_cast<std::size_t>(s.modes[i])])
        r.unstable_time += std::max(0.0, std::min(hi, t_b) - std::max(lo, t_a));
      // Switch at the start of interval i (wrap-around for i = 0).
      const bool is_switch =
          i > 0 || (s.periodic && rep > 0 && s.modes.back() != s.modes.front());
      if (is_switch && lo >= t_a && lo <= t_b) ++r.switch_count;
    }
  }
  const double act = k.c1 * (kappa_s + kappa_u) * r.unstable_time;
  r.lhs = act + r.switch_count * k.c2 * k.c2 * r.k_eff;
  r.lhs_literal = act + r.switch_count * k.c2 * k.c2 * r.k;
  r.rhs = lambda * (t_b - t_a) + rho;
  r.holds = r.lhs <= r.rhs;
  return r;
}

}  // namespace ltvcert
