#pragma once

// Perturbation g(t, x) of the nominal dynamics and its envelope
// |g(t, x)| <= gamma(t) |x| + delta(t). All expressions use absolute time.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltvcert/errors.hpp"
#include "ltvcert/expr.hpp"
#include "ltvcert/linalg.hpp"

namespace ltvcert {

struct PerturbationModel {
  Expression gamma = Expression::constant(0.0);
  Expression delta = Expression::constant(0.0);
  /// Explicit realization, one expression per state component over t and
  /// x1..xn. Absent means only the envelope is known.
  std::optional<std::vector<Expression>> g;

  double gamma_at(double t) const { return nonnegative(gamma(t), "gamma", t); }
  double delta_at(double t) const { return nonnegative(delta(t), "delta", t); }

  bool has_explicit_g() const { return g.has_value(); }

  Vector g_at(double t, const Vector& x) const {
    Vector out = Vector::Zero(x.size());
    if (!g) return out;
    if (static_cast<Eigen::Index>(g->size()) != x.size())
      throw InvalidArgument("perturbation g has " + std::to_string(g->size()) +
                            " components, state has " + std::to_string(x.size()));
    const std::span<const double> state(x.data(), static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = (*g)[static_cast<std::size_t>(i)](t, state);
    return out;
  }

 private:
  static double nonnegative(double v, const char* name, double t) {
    if (v < 0.0)
      throw ModelInconsistencyError(std::string(name) + "(t) is negative at t = " +
                                    std::to_string(t));
    return v;
  }
};

}  // namespace ltvcert
