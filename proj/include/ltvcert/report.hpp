#pragma once

// JSON forms of the analysis results. Doubles are written in nlohmann's
// shortest round-trip form, so identical results give identical bytes;
// infinities become null.

#include <cmath>
#include <string>

#include <json.hpp>

#include "ltvcert/certify.hpp"
#include "ltvcert/errors.hpp"
#include "ltvcert/lyapunov.hpp"
#include "ltvcert/regularity.hpp"

namespace ltvcert {

using Json = nlohmann::ordered_json;

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const RegularityReport& r) {
  Json j;
  j["L"] = r.L;
  j["alpha_max"] = r.alpha_max;
  j["jump_count_per_window"] = r.jump_count_per_window;
  j["assumption24_suspect"] = r.assumption24_suspect;
  j["horizon"] = r.horizon;
  j["periodic"] = r.periodic;
  j["alpha_variation_ladder"] = r.alpha_variation_ladder;
  return j;
}

inline Json to_json(const ConstantsBundle& k) {
  Json j;
  j["c1"] = k.c1;
  j["c2"] = k.c2;
  j["c"] = k.c;
  j["beta"] = k.beta;
  j["kappa"] = k.kappa;
  j["mode"] = to_string(k.mode);
  return j;
}

inline Json to_json(const WindowSummary& w, bool with_parts) {
  Json j;
  j["t_a"] = w.t_a;
  j["t_b"] = w.t_b;
  if (with_parts) {
    j["int_phi"] = w.int_phi;
    j["int_gamma"] = w.int_gamma;
    j["tv_tilde"] = w.tv_tilde;
  }
  j["lhs"] = w.lhs;
  j["rhs"] = w.rhs;
  return j;
}

inline Json to_json(const IssConstants& c) {
  Json j;
  j["a"] = c.a;
  j["b"] = c.b;
  j["k1"] = c.k1;
  j["k2"] = c.k2;
  j["k3"] = c.k3;
  return j;
}

/// Certificate block; the base-window integrals are also lifted to the top
/// level under their conventional names.
inline Json to_json(const Certificate& c) {
  Json j;
  j["feasible"] = c.feasible;
  j["kappa"] = c.kappa;
  j["lambda"] = c.lambda;
  j["lambda_bound"] = lambda_bound(c.constants);
  j["lambda_scanned"] = c.lambda_scanned;
  j["rho"] = finite_or_null(c.rho);
  j["epsilon"] = c.feasible ? Json(c.epsilon) : Json(nullptr);
  j["constants"] = to_json(c.constants);
  j["int_phi"] = c.base_window.int_phi;
  j["int_gamma"] = c.base_window.int_gamma;
  j["tv_tilde"] = c.base_window.tv_tilde;
  j["lhs"] = c.base_window.lhs;
  j["rhs"] = c.base_window.rhs;
  j["window"] = to_json(c.base_window, true);
  j["worst_window"] = to_json(c.worst_window, false);
  j["horizon"] = {{"t0", c.t0}, {"T", c.T}, {"periodic", c.periodic}};
  j["iss"] = c.iss ? to_json(*c.iss) : Json(nullptr);
  j["notes"] = c.notes;
  return j;
}

namespace detail {
inline double json_number(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number())
    throw ConfigError(path + "." + key + ": expected a number");
  return it->get<double>();
}
}  // namespace detail

/// Reads back the fields of a certificate report needed for monitoring.
inline Certificate certificate_from_json(const Json& report) {
  const Json& j = report.contains("certificate") ? report["certificate"] : report;
  const std::string p = report.contains("certificate") ? "$.certificate" : "$";
  Certificate c;
  if (!j.contains("feasible") || !j["feasible"].is_boolean())
    throw ConfigError(p + ".feasible: expected a boolean");
  c.feasible = j["feasible"].get<bool>();
  c.kappa = detail::json_number(j, "kappa", p);
  c.lambda = detail::json_number(j, "lambda", p);
  if (!c.feasible) return c;
  c.rho = detail::json_number(j, "rho", p);
  c.epsilon = detail::json_number(j, "epsilon", p);
  if (!j.contains("constants")) throw ConfigError(p + ".constants: missing");
  const Json& k = j["constants"];
  c.constants.c1 = detail::json_number(k, "c1", p + ".constants");
  c.constants.c2 = detail::json_number(k, "c2", p + ".constants");
  c.constants.kappa = c.kappa;
  if (!j.contains("iss") || !j["iss"].is_object()) throw ConfigError(p + ".iss: missing");
  const Json& s = j["iss"];
  IssConstants iss;
  iss.a = detail::json_number(s, "a", p + ".iss");
  iss.b = detail::json_number(s, "b", p + ".iss");
  iss.k1 = detail::json_number(s, "k1", p + ".iss");
  iss.k2 = detail::json_number(s, "k2", p + ".iss");
  iss.k3 = detail::json_number(s, "k3", p + ".iss");
  c.iss = iss;
  if (j.contains("horizon")) {
    c.t0 = detail::json_number(j["horizon"], "t0", p + ".horizon");
    c.T = detail::json_number(j["horizon"], "T", p + ".horizon");
  }
  return c;
}

}  // namespace ltvcert
