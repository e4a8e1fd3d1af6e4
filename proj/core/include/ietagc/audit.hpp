#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ietagc/dataset.hpp"
#include "ietagc/denoiser.hpp"
#include "ietagc/memory_bank.hpp"
#include "ietagc/schedule.hpp"

namespace ietagc {

/// Nearest-neighbor distance ratio of one generated sample against the
/// training set.
struct NnResult {
  double raw_l2 = 0.0;
  double ratio = 0.0;
  std::int64_t nearest_id = -1;
};

/// ratio = l2(xbar, nearest) / mean(l2 to the n closest training points).
/// The nearest neighbor itself is part of the n-point mean unless
/// include_nearest is false (then the n points ranked after it are used).
/// n is clamped to the available neighbor count.
NnResult nn_ratio(const Sample& xbar, const Dataset& train, int n,
                  bool include_nearest = true);

struct MemorizationVerdict {
  std::int64_t generated_id = -1;
  std::int64_t nearest_train_id = -1;
  double raw_l2 = 0.0;
  double nn_ratio = 0.0;
  std::vector<std::pair<double, bool>> flags;  // (threshold, ratio <= threshold)
};

std::vector<MemorizationVerdict> audit_verdicts(
    const std::vector<Sample>& generated, const Dataset& train, int n,
    const std::vector<double>& thresholds);

struct MqCounts {
  std::vector<double> thresholds;
  std::vector<std::size_t> counts;  // #generated with ratio <= threshold
};

/// Memorization-quantity counts; thresholds are evaluated with <= and the
/// counts are monotone in the threshold.
MqCounts mq_counts(const std::vector<Sample>& generated, const Dataset& train,
                   int n, const std::vector<double>& thresholds);
MqCounts mq_from_verdicts(const std::vector<MemorizationVerdict>& verdicts,
                          const std::vector<double>& thresholds);

/// Frechet distance between Gaussian fits of the two sets, in raw sample
/// space: ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2}).
double frechet_distance(const std::vector<Sample>& a,
                        const std::vector<Sample>& b);

struct LossProfileRow {
  int t = 1;
  double mem_mean = 0.0, mem_p15 = 0.0, mem_p85 = 0.0;
  double ctl_mean = 0.0, ctl_p15 = 0.0, ctl_p85 = 0.0;
};

/// Monte-Carlo loss statistics per timestep for a memorized group and a
/// control group. Noise streams are keyed by (t, slot) only, so identical
/// groups produce identical curves.
std::vector<LossProfileRow> loss_profile(const Denoiser& p,
                                         const std::vector<Sample>& memorized,
                                         const std::vector<Sample>& control,
                                         const Schedule& sched,
                                         const std::vector<int>& t_grid,
                                         int draws_per_t, std::uint64_t seed);

/// Evenly spread grid of `points` timesteps covering [1, T].
std::vector<int> default_t_grid(int T, int points = 20);

struct SkipHistogram {
  std::vector<std::uint64_t> counts;  // index = sample id
  int total_epochs = 0;
  std::uint64_t q50 = 0, q90 = 0, q99 = 0;  // nearest-rank quantiles
  std::uint64_t max_count = 0;
};

SkipHistogram skip_histogram(const std::vector<SkipRecord>& records,
                             std::size_t n_samples, int total_epochs);

struct ClusteringResult {
  // l2 distances from each group member to every other dataset sample.
  std::vector<double> most_skipped;
  std::vector<double> least_skipped;
};

ClusteringResult clustering_analysis(const std::vector<Sample>& most_skipped,
                                     const std::vector<Sample>& least_skipped,
                                     const Dataset& full);

/// Total squared magnitude of the unitary 2-D DFT of x viewed as a
/// sqrt(d) x sqrt(d) grid, DC component excluded.
double spectral_energy(const Sample& x);

/// Inclusive linear-interpolation percentile of an unsorted value list.
double percentile(std::vector<double> values, double p);

}  // namespace ietagc
