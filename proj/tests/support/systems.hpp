#pragma once

// Reference systems shared by the test binaries.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ltvcert/certify.hpp"
#include "ltvcert/expr.hpp"
#include "ltvcert/perturbation.hpp"
#include "ltvcert/trajectory.hpp"

namespace ltvtest {

using namespace ltvcert;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline Segment segment(double t0, double t1, const std::vector<std::string>& entries) {
  Segment s;
  s.t_start = t0;
  s.t_end = t1;
  for (const auto& e : entries) s.entries.push_back(parse(e));
  return s;
}

/// The 2-D example with period 2 pi: A(t) = (1.1 cos(t/2) - 1) I + [[0, 1], [-1, 0]].
inline MatrixTrajectory example_system() {
  return MatrixTrajectory(
      2, {segment(0.0, kTwoPi, {"1.1*cos(t/2)-1", "1", "-1", "1.1*cos(t/2)-1"})}, kTwoPi);
}

/// g = 0.1 [[sin t, cos t], [cos t, sin t]] x with gamma = 0.1 (|cos t| + |sin t|).
inline PerturbationModel example_perturbation(bool with_g = true) {
  PerturbationModel p;
  p.gamma = parse("0.1*(abs(cos(t))+abs(sin(t)))");
  if (with_g)
    p.g = std::vector<Expression>{parse("0.1*(sin(t)*x1+cos(t)*x2)", 2),
                                  parse("0.1*(cos(t)*x1+sin(t)*x2)", 2)};
  return p;
}

inline MatrixTrajectory scalar_path(const std::string& expr, double t_end,
                                    std::optional<double> period = std::nullopt) {
  return MatrixTrajectory(1, {segment(0.0, t_end, {expr})}, period);
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

}  // namespace ltvtest
