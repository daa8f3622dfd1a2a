#pragma once

// System definition files: JSON with a schema_version field. Every failure
// is a ConfigError naming the offending field path.

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltvcert/certify.hpp"
#include "ltvcert/errors.hpp"
#include "ltvcert/expr.hpp"
#include "ltvcert/lyapunov.hpp"
#include "ltvcert/perturbation.hpp"
#include "ltvcert/trajectory.hpp"

namespace ltvcert {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kDefaultGridPoints = 512;

struct AnalysisOptions {
  std::optional<double> kappa;
  std::optional<double> beta;  // formula mode; default kappa / 2
  std::optional<double> c;     // formula mode; default estimated
  ConstantsMode mode = ConstantsMode::kSpectral;
  std::optional<double> lambda;
  std::optional<double> rho;
  int grid_points = kDefaultGridPoints;  // per period or per horizon
  std::optional<double> horizon;
};

struct SimulationDefaults {
  std::optional<std::vector<double>> x0;
  double t0 = 0.0;
  std::optional<double> tf;
  double step = 1e-3;
};

struct SwitchedSpec {
  std::vector<Matrix> modes;
  SwitchingSchedule schedule;
  double kappa_s = 1.0;
  double kappa_u = 0.0;
};

struct OutputPaths {
  std::optional<std::string> json;
  std::optional<std::string> csv;
};

struct SystemConfig {
  int dimension = 0;
  MatrixTrajectory trajectory;
  PerturbationModel perturbation;
  AnalysisOptions analysis;
  SimulationDefaults simulation;
  std::optional<SwitchedSpec> switched;
  OutputPaths output;
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": required field is missing");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path + ": must be finite");
  return v;
}

inline std::optional<double> opt_number(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return number(*it, path + "." + key);
}

inline Expression expression(const json& j, const std::string& path, int state_dim = 0) {
  if (j.is_number()) return Expression::constant(number(j, path));
  if (!j.is_string()) throw ConfigError(path + ": expected an expression string or a number");
  try {
    return parse(j.get<std::string>(), state_dim);
  } catch (const ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline Matrix constant_matrix(const json& j, int n, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ConfigError(path + ": expected " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ConfigError(rp + ": expected " + std::to_string(n) + " entries");
    for (int c = 0; c < n; ++c)
      m(r, c) = number(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

inline std::vector<Expression> entries(const json& j, int n, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ConfigError(path + ": expected " + std::to_string(n) + " rows");
  std::vector<Expression> out;
  for (int r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ConfigError(rp + ": expected " + std::to_string(n) + " entries");
    for (int c = 0; c < n; ++c)
      out.push_back(expression(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]"));
  }
  return out;
}

inline SwitchedSpec switched_spec(const json& j, int n, const std::string& path) {
  SwitchedSpec s;
  const json& modes = require(j, "modes", path);
  if (!modes.is_array() || modes.empty()) throw ConfigError(path + ".modes: expected a non-empty array");
  for (std::size_t i = 0; i < modes.size(); ++i)
    s.modes.push_back(constant_matrix(modes[i], n, path + ".modes[" + std::to_string(i) + "]"));
  const json& times = require(j, "switch_times", path);
  if (!times.is_array()) throw ConfigError(path + ".switch_times: expected an array");
  for (std::size_t i = 0; i < times.size(); ++i)
    s.schedule.switch_times.push_back(number(times[i], path + ".switch_times[" + std::to_string(i) + "]"));
  const json& seq = require(j, "mode_sequence", path);
  if (!seq.is_array()) throw ConfigError(path + ".mode_sequence: expected an array");
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!seq[i].is_number_integer())
      throw ConfigError(path + ".mode_sequence[" + std::to_string(i) + "]: expected an integer");
    s.schedule.modes.push_back(seq[i].get<int>());
  }
  s.schedule.horizon = number(require(j, "horizon", path), path + ".horizon");
  if (auto it = j.find("periodic"); it != j.end()) {
    if (!it->is_boolean()) throw ConfigError(path + ".periodic: expected a boolean");
    s.schedule.periodic = it->get<bool>();
  }
  s.kappa_s = opt_number(j, "kappa_s", path).value_or(1.0);
  s.kappa_u = opt_number(j, "kappa_u", path).value_or(0.0);
  try {
    validate_schedule(s.modes, s.schedule);
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return s;
}

}  // namespace detail

inline SystemConfig config_from_json(const nlohmann::json& j) {
  using detail::number;
  using detail::require;
  if (!j.is_object()) throw ConfigError("$: expected a JSON object");
  SystemConfig cfg;
  const auto& ver = require(j, "schema_version", "$");
  if (!ver.is_number_integer() || ver.get<int>() != kConfigSchemaVersion)
    throw ConfigError("$.schema_version: expected " + std::to_string(kConfigSchemaVersion));
  const auto& dim = require(j, "dimension", "$");
  if (!dim.is_number_integer() || dim.get<int>() < 1)
    throw ConfigError("$.dimension: expected a positive integer");
  cfg.dimension = dim.get<int>();
  const int n = cfg.dimension;

  std::optional<double> period = detail::opt_number(j, "period", "$");
  double jump_tol = detail::opt_number(j, "jump_tolerance", "$").value_or(1e-12);

  if (auto it = j.find("switched"); it != j.end()) {
    if (j.contains("segments"))
      throw ConfigError("$.segments: not allowed together with $.switched");
    cfg.switched = detail::switched_spec(*it, n, "$.switched");
    try {
      cfg.trajectory = switched_trajectory(cfg.switched->modes, cfg.switched->schedule);
    } catch (const Error& e) {
      throw ConfigError(std::string("$.switched: ") + e.what());
    }
  } else {
    const auto& segs = require(j, "segments", "$");
    if (!segs.is_array() || segs.empty())
      throw ConfigError("$.segments: expected a non-empty array");
    std::vector<Segment> out;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const std::string p = "$.segments[" + std::to_string(i) + "]";
      Segment s;
      s.t_start = number(require(segs[i], "t_start", p), p + ".t_start");
      s.t_end = number(require(segs[i], "t_end", p), p + ".t_end");
      if (!(s.t_start < s.t_end)) throw ConfigError(p + ": t_start must be < t_end");
      if (i == 0 && s.t_start != 0.0) throw ConfigError(p + ".t_start: first segment must start at 0");
      if (i > 0) {
        const double prev = out.back().t_end;
        if (s.t_start < prev) throw ConfigError(p + ".t_start: overlaps the previous segment");
        if (s.t_start > prev) throw ConfigError(p + ".t_start: gap after the previous segment");
      }
      s.entries = detail::entries(require(segs[i], "entries", p), n, p + ".entries");
      out.push_back(std::move(s));
    }
    if (period && *period != out.back().t_end)
      throw ConfigError("$.period: must equal the end of the last segment");
    try {
      cfg.trajectory = MatrixTrajectory(n, std::move(out), period, jump_tol);
    } catch (const Error& e) {
      throw ConfigError(std::string("$.segments: ") + e.what());
    }
  }

  if (auto it = j.find("perturbation"); it != j.end()) {
    const std::string p = "$.perturbation";
    if (!it->is_object()) throw ConfigError(p + ": expected an object");
    if (auto g = it->find("gamma"); g != it->end())
      cfg.perturbation.gamma = detail::expression(*g, p + ".gamma");
    if (auto d = it->find("delta"); d != it->end())
      cfg.perturbation.delta = detail::expression(*d, p + ".delta");
    if (auto g = it->find("g"); g != it->end() && !g->is_null()) {
      if (!g->is_array() || static_cast<int>(g->size()) != n)
        throw ConfigError(p + ".g: expected " + std::to_string(n) + " expressions");
      std::vector<Expression> comps;
      for (std::size_t i = 0; i < g->size(); ++i)
        comps.push_back(detail::expression((*g)[i], p + ".g[" + std::to_string(i) + "]", n));
      cfg.perturbation.g = std::move(comps);
    }
  }

  if (auto it = j.find("analysis"); it != j.end()) {
    const std::string p = "$.analysis";
    if (!it->is_object()) throw ConfigError(p + ": expected an object");
    AnalysisOptions& a = cfg.analysis;
    a.kappa = detail::opt_number(*it, "kappa", p);
    a.beta = detail::opt_number(*it, "beta", p);
    a.c = detail::opt_number(*it, "c", p);
    a.lambda = detail::opt_number(*it, "lambda", p);
    a.rho = detail::opt_number(*it, "rho", p);
    a.horizon = detail::opt_number(*it, "horizon", p);
    if (auto m = it->find("constants_mode"); m != it->end()) {
      const std::string v = m->is_string() ? m->get<std::string>() : "";
      if (v == "spectral") a.mode = ConstantsMode::kSpectral;
      else if (v == "formula") a.mode = ConstantsMode::kFormula;
      else throw ConfigError(p + ".constants_mode: expected \"spectral\" or \"formula\"");
    }
    if (auto g = it->find("grid_points"); g != it->end()) {
      if (!g->is_number_integer() || g->get<int>() < 8)
        throw ConfigError(p + ".grid_points: expected an integer >= 8");
      a.grid_points = g->get<int>();
    }
    if (a.kappa && !(*a.kappa > 0.0)) throw ConfigError(p + ".kappa: must be positive");
  }

  if (auto it = j.find("simulation"); it != j.end()) {
    const std::string p = "$.simulation";
    if (!it->is_object()) throw ConfigError(p + ": expected an object");
    SimulationDefaults& s = cfg.simulation;
    if (auto x = it->find("x0"); x != it->end()) {
      if (!x->is_array() || static_cast<int>(x->size()) != n)
        throw ConfigError(p + ".x0: expected " + std::to_string(n) + " numbers");
      std::vector<double> v;
      for (std::size_t i = 0; i < x->size(); ++i)
        v.push_back(number((*x)[i], p + ".x0[" + std::to_string(i) + "]"));
      s.x0 = std::move(v);
    }
    s.t0 = detail::opt_number(*it, "t0", p).value_or(0.0);
    s.tf = detail::opt_number(*it, "tf", p);
    s.step = detail::opt_number(*it, "step", p).value_or(1e-3);
    if (!(s.step > 0.0)) throw ConfigError(p + ".step: must be positive");
  }

  if (auto it = j.find("output"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("$.output: expected an object");
    if (auto v = it->find("json"); v != it->end() && v->is_string()) cfg.output.json = v->get<std::string>();
    if (auto v = it->find("csv"); v != it->end() && v->is_string()) cfg.output.csv = v->get<std::string>();
  }
  return cfg;
}

inline SystemConfig config_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return config_from_string(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace ltvcert
