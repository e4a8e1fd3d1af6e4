#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ietagc {

/// One skipped (gradient-masked) sample presentation.
struct SkipRecord {
  std::int64_t sample_id = -1;
  int epoch = 0;
  int t = 1;
  double loss = 0.0;
  double ratio = 0.0;
};

/// One masking decision input: a sample's true loss at its drawn timestep.
struct MaskEntry {
  std::int64_t sample_id = -1;
  int t = 1;
  double loss = 0.0;
};

/// Per-timestep EMA of training losses: l[t] <- gamma * l[t] + (1-gamma) * loss.
/// A sample whose loss at timestep t falls below lambda * l[t] counts as
/// already memorized and its gradient is dropped for that presentation.
class MemoryBank {
 public:
  MemoryBank(int T, double gamma, double init_value = 0.0);

  int T() const { return static_cast<int>(values_.size()); }
  double gamma() const { return gamma_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  const std::vector<std::uint64_t>& update_counts() const { return counts_; }
  std::vector<std::uint64_t>& mutable_update_counts() { return counts_; }

  double value(int t) const;  // l[t], t in [1, T]

  /// loss / l[t]; +infinity when l[t] is exactly zero, so a cold bank can
  /// never trigger a skip.
  double ratio(double loss, int t) const;

  /// EMA update with the true (unmasked) loss; bumps update_count[t].
  void update(int t, double loss);

  /// Pure masking pass: returns the losses with masked entries zeroed
  /// (masked iff ratio < lambda, strict). The bank itself is not touched —
  /// callers apply update() separately so all ratios in a batch are judged
  /// against the bank as it stood at batch start. Skips are appended to
  /// *skips and the 0/1 decisions to *mask_out when given.
  std::vector<double> apply_mask(std::span<const MaskEntry> entries, double lambda,
                                 int epoch, std::vector<SkipRecord>* skips = nullptr,
                                 std::vector<char>* mask_out = nullptr) const;

 private:
  std::vector<double> values_;
  std::vector<std::uint64_t> counts_;
  double gamma_;
};

}  // namespace ietagc
