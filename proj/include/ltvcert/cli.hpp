#pragma once

// Command implementations behind the `ltvcert` executable. Each returns the
// process exit code: 0 success or feasible, 1 infeasible or golden mismatch,
// 2 invalid input, 3 monitor violation.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ltvcert/builtin_examples.hpp"
#include "ltvcert/certify.hpp"
#include "ltvcert/config.hpp"
#include "ltvcert/errors.hpp"
#include "ltvcert/lyapunov.hpp"
#include "ltvcert/regularity.hpp"
#include "ltvcert/report.hpp"
#include "ltvcert/simulate.hpp"

namespace ltvcert {

enum ExitCode : int {
  kExitOk = 0,
  kExitInfeasible = 1,
  kExitInvalid = 2,
  kExitViolation = 3,
};

struct AnalysisOverrides {
  std::optional<double> kappa;
  std::optional<double> lambda;
  std::optional<double> rho;
  std::optional<ConstantsMode> mode;
};

struct AnalysisResult {
  RegularityReport regularity;
  ConstantsBundle constants;
  Certificate certificate;
  double grid_step = 0.0;
  int grid_points = kDefaultGridPoints;
  std::optional<Json> switched;
};

/// Base interval length used for grid densities: the period or T_def.
inline double base_length(const MatrixTrajectory& traj) {
  return traj.period().value_or(traj.horizon());
}

inline RegularityReport regularity_of(const SystemConfig& cfg) {
  return check_regularity(cfg.trajectory, base_length(cfg.trajectory) / cfg.analysis.grid_points);
}

/// Regularity, constants and certificate for a configured system.
inline AnalysisResult analyze(const SystemConfig& cfg, const AnalysisOverrides& ov = {}) {
  AnalysisResult r;
  const MatrixTrajectory& traj = cfg.trajectory;
  const std::optional<double> kappa = ov.kappa ? ov.kappa : cfg.analysis.kappa;
  if (!kappa) throw ConfigError("$.analysis.kappa: required (or pass --kappa)");
  if (!(*kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  r.grid_points = cfg.analysis.grid_points;
  r.grid_step = base_length(traj) / r.grid_points;
  r.regularity = regularity_of(cfg);
  const ConstantsMode mode = ov.mode.value_or(cfg.analysis.mode);
  if (mode == ConstantsMode::kSpectral) {
    r.constants = constants_spectral(traj, *kappa, r.grid_step);
  } else {
    const double beta = cfg.analysis.beta.value_or(0.5 * *kappa);
    const double c = cfg.analysis.c ? *cfg.analysis.c
                                    : estimate_c(traj, *kappa, beta, 10.0 / beta, r.grid_step);
    r.constants = constants_formula(r.regularity.L, r.regularity.alpha_max, *kappa, beta, c);
  }
  CertifyOptions co;
  co.lambda = ov.lambda ? ov.lambda : cfg.analysis.lambda;
  co.rho = ov.rho ? ov.rho : cfg.analysis.rho;
  co.horizon = cfg.analysis.horizon;
  co.min_points = r.grid_points;
  r.certificate = certify(traj, cfg.perturbation, *kappa, r.constants, co);

  if (cfg.switched) {
    const SwitchedSpec& s = *cfg.switched;
    const double t_b = s.schedule.horizon;
    const double rho = std::isfinite(r.certificate.rho) ? r.certificate.rho : 0.0;
    const SwitchedResult sw = switched_condition(s.modes, s.schedule, s.kappa_s, s.kappa_u,
                                                 r.constants, r.certificate.lambda, rho, 0.0, t_b);
    // Same shift as the switched bound so the two left-hand sides compare.
    const LhsBreakdown general = lhs(traj, cfg.perturbation, s.kappa_s, r.constants, 0.0, t_b);
    const double gamma_term = r.constants.c2 * general.int_gamma;
    Json j;
    j["window"] = {{"t_a", 0.0}, {"t_b", t_b}};
    j["kappa_s"] = s.kappa_s;
    j["kappa_u"] = s.kappa_u;
    j["unstable_time"] = sw.unstable_time;
    j["switch_count"] = sw.switch_count;
    j["k"] = sw.k;
    j["k_eff"] = sw.k_eff;
    j["switched_lhs"] = sw.lhs + gamma_term;
    j["switched_lhs_literal_k"] = sw.lhs_literal + gamma_term;
    j["general_lhs"] = general.value;
    j["rhs"] = sw.rhs;
    j["holds"] = sw.lhs + gamma_term <= sw.rhs;
    j["dominates"] = sw.lhs + gamma_term >= general.value;
    r.switched = j;
  }
  return r;
}

inline Json certify_report(const AnalysisResult& r) {
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["command"] = "certify";
  Json d;
  d["kappa"] = r.certificate.kappa;
  d["beta"] = r.constants.beta;
  d["constants_mode"] = to_string(r.constants.mode);
  d["epsilon"] = r.certificate.feasible ? Json(r.certificate.epsilon) : Json(nullptr);
  d["epsilon_rule"] = "midpoint of (0, c1/c2 - 2 lambda)";
  d["grid_points"] = r.grid_points;
  d["grid_step"] = r.grid_step;
  d["lambda_source"] = r.certificate.lambda_scanned ? "scanned" : "given";
  d["certification_horizon"] = r.certificate.T;
  j["defaults"] = d;
  j["regularity"] = to_json(r.regularity);
  j["certificate"] = to_json(r.certificate);
  if (r.switched) j["switched"] = *r.switched;
  return j;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void print_regularity(std::ostream& out, const RegularityReport& r) {
  out << "L = " << fmt(r.L) << "\n"
      << "alpha_max = " << fmt(r.alpha_max) << "\n"
      << "jumps per window = " << r.jump_count_per_window << "\n"
      << "horizon = " << fmt(r.horizon) << (r.periodic ? " (period)" : " (T_def)") << "\n"
      << "assumption24_suspect = " << (r.assumption24_suspect ? "true" : "false") << "\n";
}

inline void print_certificate(std::ostream& out, const AnalysisResult& r) {
  const Certificate& c = r.certificate;
  out << "c1 = " << fmt(r.constants.c1) << ", c2 = " << fmt(r.constants.c2) << " ("
      << to_string(r.constants.mode) << ")\n"
      << "window (" << fmt(c.base_window.t_a) << ", " << fmt(c.base_window.t_b) << "]: "
      << "int_phi = " << fmt(c.base_window.int_phi) << ", int_gamma = "
      << fmt(c.base_window.int_gamma) << ", tv_tilde = " << fmt(c.base_window.tv_tilde) << "\n"
      << "lhs = " << fmt(c.base_window.lhs) << ", rhs = " << fmt(c.base_window.rhs) << "\n"
      << "lambda = " << fmt(c.lambda) << (c.lambda_scanned ? " (scanned)" : "")
      << ", bound = " << fmt(lambda_bound(r.constants)) << "\n";
  if (c.feasible) {
    out << "feasible: rho = " << fmt(c.rho);
    if (c.iss)
      out << ", a = " << fmt(c.iss->a) << ", k1 = " << fmt(c.iss->k1) << ", k2 = "
          << fmt(c.iss->k2) << ", k3 = " << fmt(c.iss->k3);
    out << "\n";
  } else {
    out << "infeasible: worst window (" << fmt(c.worst_window.t_a) << ", "
        << fmt(c.worst_window.t_b) << "] has lhs " << fmt(c.worst_window.lhs) << " > rhs "
        << fmt(c.worst_window.rhs) << "\n";
  }
  for (const auto& n : c.notes) out << "note: " << n << "\n";
}

inline bool write_text(const std::string& path, const std::string& text, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    err << "error: cannot write " << path << "\n";
    return false;
  }
  f << text;
  return static_cast<bool>(f);
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ModelInconsistencyError& e) {
    err << "violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const BlowUpError& e) {
    err << "violation: " << e.what() << "\n";
    return kExitViolation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace detail

inline int cmd_validate(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const SystemConfig cfg = load_config(config_path);
    detail::print_regularity(out, regularity_of(cfg));
    return static_cast<int>(kExitOk);
  });
}

struct CertifyFlags {
  AnalysisOverrides overrides;
  std::optional<std::string> json_out;
};

inline int run_certify(const SystemConfig& cfg, const CertifyFlags& flags, std::ostream& out,
                       std::ostream& err) {
  const AnalysisResult r = analyze(cfg, flags.overrides);
  const std::string report = certify_report(r).dump(2) + "\n";
  const std::optional<std::string> path = flags.json_out ? flags.json_out : cfg.output.json;
  if (path) {
    if (!detail::write_text(*path, report, err)) return kExitInvalid;
    detail::print_certificate(out, r);
  } else {
    out << report;
  }
  return r.certificate.feasible ? kExitOk : kExitInfeasible;
}

inline int cmd_certify(const std::string& config_path, const CertifyFlags& flags,
                       std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] { return run_certify(load_config(config_path), flags, out, err); });
}

struct SimulateFlags {
  std::optional<std::vector<double>> x0;
  std::optional<double> t0;
  std::optional<double> tf;
  std::optional<double> step;
  std::optional<std::string> csv;
  /// Certificate report (JSON from `certify`) to monitor against.
  std::optional<std::string> check_iss;
};

inline int run_simulate(const SystemConfig& cfg, const SimulateFlags& flags, std::ostream& out,
                        std::ostream& err) {
  const MatrixTrajectory& traj = cfg.trajectory;
  const int n = traj.dimension();
  std::vector<double> x0v = flags.x0 ? *flags.x0 : cfg.simulation.x0.value_or(std::vector<double>(static_cast<std::size_t>(n), 1.0));
  if (static_cast<int>(x0v.size()) != n)
    throw ConfigError("--x0: expected " + std::to_string(n) + " components");
  const Vector x0 = Eigen::Map<const Vector>(x0v.data(), n);
  const double t0 = flags.t0.value_or(cfg.simulation.t0);
  const double tf = flags.tf ? *flags.tf
                             : cfg.simulation.tf.value_or(traj.periodic() ? 10.0 * *traj.period()
                                                                          : traj.horizon());
  SimulationOptions so;
  so.step = flags.step.value_or(cfg.simulation.step);

  std::optional<Certificate> cert;
  if (flags.check_iss) {
    std::ifstream f(*flags.check_iss);
    if (!f) throw ConfigError(*flags.check_iss + ": cannot open certificate");
    Json j;
    try {
      j = Json::parse(f);
    } catch (const Json::parse_error& e) {
      throw ConfigError(*flags.check_iss + ": malformed JSON: " + e.what());
    }
    cert = certificate_from_json(j);
    if (!cert->feasible) throw ConfigError(*flags.check_iss + ": certificate is not feasible");
    so.kappa = cert->kappa;
  } else {
    so.kappa = cfg.analysis.kappa;
  }

  const SimulationTrace trace = integrate(traj, cfg.perturbation, x0, t0, tf, so);
  std::optional<MonitorReport> mon;
  std::optional<IssReport> iss;
  if (cert) {
    mon = monitor_W(trace, traj, cfg.perturbation, *cert);
    iss = verify_iss(trace, *cert, cfg.perturbation);
  }
  std::ostringstream csv;
  write_trace_csv(csv, trace, mon ? &*mon : nullptr, iss ? &*iss : nullptr);
  const std::optional<std::string> path = flags.csv ? flags.csv : cfg.output.csv;
  std::ostream& diag = path ? out : err;
  if (path) {
    if (!detail::write_text(*path, csv.str(), err)) return kExitInvalid;
  } else {
    out << csv.str();
  }
  diag << "samples = " << trace.samples.size() << ", |x(tf)| = "
       << detail::fmt(trace.samples.back().x.norm()) << (trace.nominal ? " (nominal, g = 0)" : "")
       << "\n";
  if (!cert) return kExitOk;
  int code = kExitOk;
  if (mon->ok) {
    diag << "monitor: ok (" << mon->flow_checks << " flow checks, " << mon->jump_checks
         << " jump checks)\n";
  } else {
    diag << "monitor: violation (" << mon->first_violation->kind << ") at t = "
         << detail::fmt(mon->first_violation->t) << ": " << mon->first_violation->message << "\n";
    code = kExitViolation;
  }
  if (iss->ok) {
    diag << "iss: ok, min margin = " << detail::fmt(iss->min_margin) << "\n";
  } else {
    diag << "iss: envelope violated at t = " << detail::fmt(*iss->first_violation_t)
         << "; either the certificate constants or the integrator step are wrong\n";
    code = kExitViolation;
  }
  return code;
}

inline int cmd_simulate(const std::string& config_path, const SimulateFlags& flags,
                        std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] { return run_simulate(load_config(config_path), flags, out, err); });
}

struct GoldenValue {
  std::string name;
  double expected = 0.0;
  double tolerance = 0.0;
  double actual = 0.0;
  bool ok() const { return std::fabs(actual - expected) <= tolerance; }
};

inline int report_golden(const std::string& id, const std::vector<GoldenValue>& values,
                         const std::vector<std::pair<std::string, bool>>& checks,
                         std::ostream& out) {
  bool all = true;
  out << "reproduce " << id << "\n";
  for (const GoldenValue& v : values) {
    all = all && v.ok();
    out << "  " << std::left << std::setw(22) << v.name << " expected " << detail::fmt(v.expected)
        << " +- " << detail::fmt(v.tolerance) << ", got " << detail::fmt(v.actual)
        << (v.ok() ? "  ok" : "  MISMATCH (diff " + detail::fmt(v.actual - v.expected) + ")")
        << "\n";
  }
  for (const auto& [name, ok] : checks) {
    all = all && ok;
    out << "  " << std::left << std::setw(22) << name << (ok ? " true  ok" : " false  MISMATCH")
        << "\n";
  }
  out << (all ? "all golden values match\n" : "golden mismatch\n");
  return all ? kExitOk : kExitInfeasible;
}

inline int cmd_reproduce(const std::string& id, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    const auto ex = find_builtin(id);
    if (!ex) {
      err << "error: unknown example '" << id << "' (expected one of:";
      for (const auto& e : kBuiltinExamples) err << " " << e.id;
      err << ")\n";
      return kExitInvalid;
    }
    const SystemConfig cfg = config_from_string(std::string(ex->json));
    if (id == "paper-sec5") {
      const AnalysisResult r = analyze(cfg);
      const Certificate& c = r.certificate;
      return report_golden(
          id,
          {{"c1", 0.2381, 1e-3, r.constants.c1},
           {"c2", 0.5, 1e-3, r.constants.c2},
           {"int_phi", 2.2, 1e-3, c.base_window.int_phi},
           {"tv_tilde", 2.2, 1e-3, c.base_window.tv_tilde},
           {"int_gamma", 0.8, 1e-3, c.base_window.int_gamma},
           {"lhs", 1.4738, 1e-3, c.base_window.lhs},
           {"rhs", 1.4954, 1e-3, c.base_window.rhs},
           {"alpha_max", 0.1, 1e-6, r.regularity.alpha_max},
           {"jumps_per_period", 1.0, 0.0, static_cast<double>(r.regularity.jump_count_per_window)}},
          {{"feasible", c.feasible}}, out);
    }
    if (id == "remark-counterexample") {
      const RegularityReport reg = regularity_of(cfg);
      return report_golden(id, {}, {{"assumption24_suspect", reg.assumption24_suspect}}, out);
    }
    const AnalysisResult r = analyze(cfg);
    const Json& s = *r.switched;
    out << "switched lhs = " << detail::fmt(s["switched_lhs"].get<double>())
        << ", general lhs = " << detail::fmt(s["general_lhs"].get<double>()) << "\n";
    return report_golden(id, {}, {{"switched_dominates", s["dominates"].get<bool>()}}, out);
  });
}

}  // namespace ltvcert
