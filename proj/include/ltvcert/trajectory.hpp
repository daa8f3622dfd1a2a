#pragma once

// Piecewise closed-form matrix paths A(t). Segments are half-open
// [t_start, t_end), so the path is right-continuous with left limits by
// construction; a jump is any segment boundary where the incoming and
// outgoing expressions disagree.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ltvcert/errors.hpp"
#include "ltvcert/expr.hpp"
#include "ltvcert/linalg.hpp"

namespace ltvcert {

struct Segment {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<Expression> entries;  // row-major n*n
};

/// A maximal interval on which one segment's expressions are in force.
/// Global time = offset + local time; local times lie in the segment's
/// [t_start, t_end].
struct Piece {
  std::size_t segment = 0;
  double local_start = 0.0;
  double local_end = 0.0;
  double offset = 0.0;

  double global_start() const { return offset + local_start; }
  double global_end() const { return offset + local_end; }
};

class MatrixTrajectory {
 public:
  MatrixTrajectory() = default;

  /// Segments must tile [0, T) contiguously. With a period, T must equal
  /// the period and A(t + period) = A(t). Every entry is probed on a coarse
  /// grid (endpoints included) so evaluation-domain errors surface here.
  MatrixTrajectory(int dimension, std::vector<Segment> segments,
                   std::optional<double> period = std::nullopt,
                   double jump_tolerance = 1e-12)
      : n_(dimension),
        segments_(std::move(segments)),
        period_(period),
        jump_tolerance_(jump_tolerance) {
    if (n_ <= 0) throw InvalidArgument("trajectory dimension must be positive");
    if (segments_.empty()) throw InvalidArgument("trajectory needs at least one segment");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const Segment& s = segments_[i];
      const std::string where = "segment " + std::to_string(i);
      if (!(s.t_start < s.t_end))
        throw InvalidArgument(where + ": t_start must be < t_end");
      if (s.entries.size() != static_cast<std::size_t>(n_ * n_))
        throw InvalidArgument(where + ": expected " + std::to_string(n_ * n_) +
                              " entries");
      if (i == 0 && s.t_start != 0.0)
        throw InvalidArgument(where + ": first segment must start at 0");
      if (i > 0 && s.t_start != segments_[i - 1].t_end)
        throw InvalidArgument(where + ": segments must be contiguous and non-overlapping");
      for (const Expression& e : s.entries)
        if (e.depends_on_state())
          throw InvalidArgument(where + ": matrix entries may depend on t only");
    }
    if (period_) {
      if (!(*period_ > 0.0)) throw InvalidArgument("period must be positive");
      if (horizon() != *period_)
        throw InvalidArgument("with a period, the segments must cover exactly [0, period)");
    }
    derivatives_.reserve(segments_.size());
    for (const Segment& s : segments_) {
      std::vector<Expression> d;
      d.reserve(s.entries.size());
      for (const Expression& e : s.entries) d.push_back(e.derivative());
      derivatives_.push_back(std::move(d));
    }
    probe_domains();
    compute_boundary_jumps();
  }

  int dimension() const { return n_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::optional<double> period() const { return period_; }
  bool periodic() const { return period_.has_value(); }
  /// End of the defined base interval (T_def).
  double horizon() const { return segments_.back().t_end; }
  double jump_tolerance() const { return jump_tolerance_; }

  /// Entries of segment `seg` at local time tau, valid on the closed
  /// interval [t_start, t_end]; at t_end this is the left limit.
  Matrix segment_value(std::size_t seg, double tau) const {
    const Segment& s = segments_[seg];
    Matrix m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        m(i, j) = s.entries[static_cast<std::size_t>(i * n_ + j)](tau);
    return m;
  }

  Matrix segment_derivative(std::size_t seg, double tau) const {
    const auto& d = derivatives_[seg];
    Matrix m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = d[static_cast<std::size_t>(i * n_ + j)](tau);
    return m;
  }

  /// Right-continuous value A(t).
  Matrix value_at(double t) const {
    const Location loc = locate(t, /*from_left=*/false);
    return segment_value(loc.segment, loc.local);
  }

  /// Left limit A(t^-).
  Matrix left_limit(double t) const {
    const Location loc = locate(t, /*from_left=*/true);
    return segment_value(loc.segment, loc.local);
  }

  /// Entrywise time derivative at a point interior to a segment.
  Matrix derivative_at(double t) const {
    const Location loc = locate(t, false);
    if (loc.on_boundary)
      throw DomainError("derivative_at: t = " + std::to_string(t) +
                        " is a segment boundary");
    return segment_derivative(loc.segment, loc.local);
  }

  /// Jump times in (t_a, t_b], ascending.
  std::vector<double> jump_set(double t_a, double t_b) const {
    std::vector<double> out;
    for (const Boundary& b : boundaries(t_a, t_b))
      if (b.is_jump) out.push_back(b.time);
    return out;
  }

  /// Every segment boundary in (t_a, t_b], jump or not.
  struct Boundary {
    double time = 0.0;
    std::size_t incoming = 0;  // segment active just before `time`
    std::size_t outgoing = 0;  // segment active from `time` on
    double local_in = 0.0;     // local time of `time` in the incoming segment
    double local_out = 0.0;    // local time of `time` in the outgoing segment
    bool is_jump = false;
  };

  std::vector<Boundary> boundaries(double t_a, double t_b) const {
    std::vector<Boundary> out;
    if (!(t_b > t_a)) return out;
    const std::size_t ns = segments_.size();
    if (!period_) {
      for (std::size_t i = 1; i < ns; ++i) {
        const double b = segments_[i].t_start;
        if (b > t_a + snap(t_a) && b <= t_b + snap(t_b))
          out.push_back({b, i - 1, i, b, b, boundary_jump_[i]});
      }
      return out;
    }
    const double p = *period_;
    const long k_lo = static_cast<long>(std::floor(t_a / p)) - 1;
    const long k_hi = static_cast<long>(std::floor(t_b / p)) + 1;
    for (long k = std::max(0L, k_lo); k <= k_hi; ++k) {
      const double off = static_cast<double>(k) * p;
      for (std::size_t i = 0; i < ns; ++i) {
        if (k == 0 && i == 0) continue;  // t = 0 has no left limit
        const double b = off + segments_[i].t_start;
        if (b > t_a + snap(t_a) && b <= t_b + snap(t_b)) {
          const std::size_t in = i == 0 ? ns - 1 : i - 1;
          out.push_back({b, in, i, i == 0 ? p : segments_[i].t_start,
                         segments_[i].t_start, boundary_jump_[i]});
        }
      }
    }
    return out;
  }

  /// Splits [t_a, t_b] into per-segment pieces in ascending order.
  std::vector<Piece> pieces(double t_a, double t_b) const {
    std::vector<Piece> out;
    if (!(t_b > t_a)) return out;
    check_domain(t_a, false);
    check_domain(t_b, true);
    if (!period_) {
      for (std::size_t i = 0; i < segments_.size(); ++i)
        push_piece(out, i, 0.0, t_a, t_b);
      return out;
    }
    const double p = *period_;
    const long k_lo = std::max(0L, static_cast<long>(std::floor(t_a / p)) - 1);
    const long k_hi = static_cast<long>(std::floor(t_b / p)) + 1;
    for (long k = k_lo; k <= k_hi; ++k)
      for (std::size_t i = 0; i < segments_.size(); ++i)
        push_piece(out, i, static_cast<double>(k) * p, t_a, t_b);
    return out;
  }

  /// Snapping tolerance used when matching times against boundaries.
  static double snap(double t) {
    return 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(t));
  }

 private:
  struct Location {
    std::size_t segment = 0;
    double local = 0.0;
    bool on_boundary = false;
  };

  void check_domain(double t, bool closed_end) const {
    if (!(t >= -snap(0.0)))
      throw DomainError("time " + std::to_string(t) + " is negative");
    if (!period_) {
      const double T = horizon();
      const bool ok = closed_end ? t <= T + snap(T) : t < T - snap(T);
      if (!ok)
        throw DomainError("time " + std::to_string(t) +
                          " is outside the defined horizon [0, " +
                          std::to_string(T) + ")");
    }
  }

  Location locate(double t, bool from_left) const {
    if (from_left && !(t > 0.0))
      throw DomainError("left limit requires t > 0");
    check_domain(t, from_left);
    double local = t;
    if (period_) {
      const double p = *period_;
      const double k = std::floor(t / p);
      local = t - k * p;
      if (local < 0.0) local = 0.0;
      if (local > p) local = p;
      // Snap the wrap-around so that k*p + b lands on boundary b.
      if (std::fabs(local - p) <= snap(t)) local = from_left ? p : 0.0;
      if (from_left && local <= snap(t)) local = p;
    }
    const std::size_t ns = segments_.size();
    for (std::size_t i = 0; i < ns; ++i) {
      const Segment& s = segments_[i];
      const double tol = snap(t);
      if (from_left) {
        if (local > s.t_start + tol && local <= s.t_end + tol) {
          const bool at_end = std::fabs(local - s.t_end) <= tol;
          return {i, at_end ? s.t_end : local, at_end};
        }
      } else {
        if (std::fabs(local - s.t_start) <= tol) return {i, s.t_start, true};
        if (local > s.t_start && local < s.t_end - tol) return {i, local, false};
      }
    }
    if (from_left) return {0, segments_[0].t_start, true};
    throw DomainError("time " + std::to_string(t) + " could not be located");
  }

  void push_piece(std::vector<Piece>& out, std::size_t i, double off,
                  double t_a, double t_b) const {
    const Segment& s = segments_[i];
    const double lo = std::max(s.t_start, t_a - off);
    const double hi = std::min(s.t_end, t_b - off);
    if (hi - lo <= snap(std::max(std::fabs(t_a), std::fabs(t_b)))) return;
    out.push_back({i, lo, hi, off});
  }

  void probe_domains() const {
    constexpr int kProbe = 16;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const Segment& s = segments_[i];
      for (int k = 0; k <= kProbe; ++k) {
        const double tau = s.t_start + (s.t_end - s.t_start) * k / kProbe;
        try {
          (void)segment_value(i, tau);
        } catch (const EvalDomainError& e) {
          throw EvalDomainError("segment " + std::to_string(i) + " at t = " +
                                std::to_string(tau) + ": " + e.what());
        }
      }
    }
  }

  // boundary_jump_[i]: whether the boundary at the start of segment i is a
  // jump (for i = 0 only meaningful when periodic: wrap-around).
  void compute_boundary_jumps() {
    const std::size_t ns = segments_.size();
    boundary_jump_.assign(ns, false);
    for (std::size_t i = 0; i < ns; ++i) {
      if (i == 0 && !period_) continue;
      const std::size_t in = i == 0 ? ns - 1 : i - 1;
      const Matrix right = segment_value(i, segments_[i].t_start);
      const Matrix left = segment_value(in, segments_[in].t_end);
      const double scale = 1.0 + std::max(op_norm(right), op_norm(left));
      boundary_jump_[i] = op_norm(right - left) > jump_tolerance_ * scale;
    }
  }

  int n_ = 0;
  std::vector<Segment> segments_;
  std::optional<double> period_;
  double jump_tolerance_ = 1e-12;
  std::vector<std::vector<Expression>> derivatives_;
  std::vector<bool> boundary_jump_;
};

/// Convenience: a one-segment constant trajectory on [0, horizon), periodic
/// with that horizon as period.
inline MatrixTrajectory constant_trajectory(const Matrix& a, double horizon = 1.0) {
  const int n = static_cast<int>(a.rows());
  Segment s;
  s.t_start = 0.0;
  s.t_end = horizon;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s.entries.push_back(Expression::constant(a(i, j)));
  return MatrixTrajectory(n, {s}, horizon);
}

}  // namespace ltvcert
