#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ltvcert {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression source. Carries the byte offset of the failure and
/// the tokens that would have been accepted there.
class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t offset,
             std::vector<std::string> expected = {})
      : Error(format(message, offset, expected)),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  static std::string format(const std::string& message, std::size_t offset,
                            const std::vector<std::string>& expected) {
    std::string out = message + " at offset " + std::to_string(offset);
    if (!expected.empty()) {
      out += " (expected ";
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) out += ", ";
        out += expected[i];
      }
      out += ")";
    }
    return out;
  }

  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// Division by zero, sqrt of a negative number, or a non-finite result.
class EvalDomainError : public Error {
 public:
  using Error::Error;
};

/// Time outside the trajectory's domain, or a query at an invalid point.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument to a numerical routine (bad kappa, beta, epsilon, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The eigenvalue iteration hit its cap. best_estimate is the abscissa read
/// off the partially reduced matrix.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_estimate)
      : Error(what), best_estimate_(best_estimate) {}
  double best_estimate() const { return best_estimate_; }

 private:
  double best_estimate_;
};

/// Lyapunov equation could not be solved (non-Hurwitz or ill-conditioned).
class LyapunovError : public Error {
 public:
  using Error::Error;
};

/// An explicit perturbation violates its declared envelope.
class ModelInconsistencyError : public Error {
 public:
  using Error::Error;
};

/// Simulated state exceeded the blow-up guard.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double t) : Error(what), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

/// System configuration file is malformed; message starts with the field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ltvcert
