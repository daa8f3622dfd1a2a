#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace ltvcert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Induced 2-norm (largest singular value).
inline double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 && m.cols() == 1) return std::fabs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Smallest and largest eigenvalue of a symmetric matrix.
inline std::pair<double, double> symmetric_eig_range(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

}  // namespace ltvcert
