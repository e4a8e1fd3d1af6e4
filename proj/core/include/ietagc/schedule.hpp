#pragma once

#include <vector>

namespace ietagc {

/// Noise schedule. alpha holds the cumulative signal coefficients, indexed
/// 0..T with alpha[0] = 1; beta holds the T per-step variances, beta[i]
/// belonging to step t = i + 1.
struct Schedule {
  int T = 0;
  std::vector<double> alpha;
  std::vector<double> beta;

  // Set when the builder had to raise beta_max to reach the terminal bound.
  bool beta_max_adjusted = false;
  double beta_max_requested = 0.0;
  double beta_max_used = 0.0;

  /// Schedule from explicitly supplied betas. Checks the decreasing and
  /// product-consistency invariants but not the terminal alpha bound, so
  /// degenerate (e.g. 1-step) schedules can be built for experiments.
  static Schedule from_betas(std::vector<double> betas);
};

/// Linear beta schedule over T steps. If the resulting terminal alpha exceeds
/// 1e-4, beta_max is raised (minimally) until alpha[T] <= 1e-4 and the
/// adjustment is recorded on the schedule.
Schedule build_schedule(int T, double beta_min, double beta_max);

}  // namespace ietagc
