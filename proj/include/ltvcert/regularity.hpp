#pragma once

// Sampling of the base interval and the regularity report (norm bound L,
// abscissa bound alpha_max, jump count, and the absolute-continuity probe
// for alpha(A(t))).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ltvcert/errors.hpp"
#include "ltvcert/parallel.hpp"
#include "ltvcert/quadrature.hpp"
#include "ltvcert/spectral.hpp"
#include "ltvcert/trajectory.hpp"

namespace ltvcert {

/// A point of the base interval addressed by segment and local time. The
/// closed right end of each segment is included, which stands for the left
/// limit at that boundary.
struct SamplePoint {
  std::size_t segment = 0;
  double local = 0.0;
};

/// Uniform samples of each segment with spacing at most `grid_step` and at
/// least `min_per_segment` intervals, endpoints included.
inline std::vector<SamplePoint> sample_grid(const MatrixTrajectory& traj,
                                            double grid_step,
                                            int min_per_segment = 1) {
  if (!(grid_step > 0.0)) throw InvalidArgument("grid_step must be positive");
  std::vector<SamplePoint> out;
  for (std::size_t i = 0; i < traj.segments().size(); ++i) {
    const Segment& s = traj.segments()[i];
    const double len = s.t_end - s.t_start;
    const int n = std::max(min_per_segment,
                           static_cast<int>(std::ceil(len / grid_step)));
    for (int k = 0; k <= n; ++k)
      out.push_back({i, k == n ? s.t_end : s.t_start + len * k / n});
  }
  return out;
}

struct RegularityReport {
  double L = 0.0;
  double alpha_max = 0.0;
  int jump_count_per_window = 0;
  bool assumption24_suspect = false;
  /// Length of the certified base interval: the period, or T_def.
  double horizon = 0.0;
  bool periodic = false;
  /// Polygonal variation of alpha(A(t)) at each refinement level.
  std::vector<double> alpha_variation_ladder;
};

namespace detail {

// Polygonal variation of alpha(A(t)) over all segments with `per_segment`
// uniform intervals each.
inline double alpha_polygonal_variation(const MatrixTrajectory& traj,
                                        int per_segment) {
  double total = 0.0;
  for (std::size_t i = 0; i < traj.segments().size(); ++i) {
    const Segment& s = traj.segments()[i];
    const double len = s.t_end - s.t_start;
    std::vector<double> alpha(static_cast<std::size_t>(per_segment) + 1);
    parallel_for(alpha.size(), [&](std::size_t k) {
      const double tau = k == alpha.size() - 1
                             ? s.t_end
                             : s.t_start + len * static_cast<double>(k) / per_segment;
      alpha[k] = abscissa(traj.segment_value(i, tau));
    });
    for (std::size_t k = 1; k < alpha.size(); ++k)
      total += std::fabs(alpha[k] - alpha[k - 1]);
  }
  return total;
}

}  // namespace detail

/// Number of factor-2 refinements in the absolute-continuity probe.
inline constexpr int kAlphaRefinementLevels = 4;

/// Estimates L and alpha_max by grid sampling plus golden-section refinement
/// around each segment's sampled maximum; both are inflated by a 1e-9
/// relative margin. The alpha(A(t)) probe flags non-convergence of the
/// polygonal variation under repeated halving of the grid: the estimate
/// grows by more than 10% across the ladder while the last halving still
/// moves it by more than 1%.
inline RegularityReport check_regularity(const MatrixTrajectory& traj,
                                         double grid_step) {
  if (!(grid_step > 0.0)) throw InvalidArgument("grid_step must be positive");
  RegularityReport rep;
  rep.periodic = traj.periodic();
  rep.horizon = traj.period().value_or(traj.horizon());

  const auto grid = sample_grid(traj, grid_step);
  std::vector<double> norms(grid.size()), alphas(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    const Matrix a = traj.segment_value(grid[k].segment, grid[k].local);
    norms[k] = op_norm(a);
    alphas[k] = abscissa(a);
  });

  double L = 0.0, amax = -std::numeric_limits<double>::infinity();
  // Per segment, refine around the sampled argmax of each quantity.
  std::size_t begin = 0;
  while (begin < grid.size()) {
    std::size_t end = begin;
    while (end < grid.size() && grid[end].segment == grid[begin].segment) ++end;
    const std::size_t seg = grid[begin].segment;
    auto refine = [&](const std::vector<double>& vals, auto&& f) {
      std::size_t arg = begin;
      for (std::size_t k = begin; k < end; ++k)
        if (vals[k] > vals[arg]) arg = k;
      double best = vals[arg];
      const double lo = grid[arg > begin ? arg - 1 : arg].local;
      const double hi = grid[arg + 1 < end ? arg + 1 : arg].local;
      if (hi > lo) best = std::max(best, golden_section_max(f, lo, hi, 1e-12).second);
      return best;
    };
    L = std::max(L, refine(norms, [&](double tau) {
                   return op_norm(traj.segment_value(seg, tau));
                 }));
    amax = std::max(amax, refine(alphas, [&](double tau) {
                      return abscissa(traj.segment_value(seg, tau));
                    }));
    begin = end;
  }
  rep.L = L * (1.0 + 1e-9);
  rep.alpha_max = amax + 1e-9 * std::max(1.0, std::fabs(amax));

  rep.jump_count_per_window =
      static_cast<int>(traj.jump_set(0.0, traj.horizon()).size());

  int base = 1;
  for (const Segment& s : traj.segments())
    base = std::max(base, static_cast<int>(std::ceil((s.t_end - s.t_start) / grid_step)));
  for (int level = 0; level <= kAlphaRefinementLevels; ++level)
    rep.alpha_variation_ladder.push_back(
        detail::alpha_polygonal_variation(traj, base << level));
  const auto& v = rep.alpha_variation_ladder;
  const double finest = v.back();
  if (finest > 1e-12) {
    const double total_change = std::fabs(finest - v.front()) / finest;
    const double last_change = std::fabs(finest - v[v.size() - 2]) / finest;
    rep.assumption24_suspect = total_change > 0.10 && last_change > 0.01;
  }
  return rep;
}

}  // namespace ltvcert
