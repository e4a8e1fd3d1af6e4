#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ietagc {

/// One training or generated datum. Within a Dataset, id equals the sample's
/// position, which keeps skip records, shard plans and histograms index-based.
struct Sample {
  std::vector<double> x;
  int label = -1;  // -1 = no class information
  std::int64_t id = -1;
};

struct Dataset {
  std::vector<Sample> samples;
  int d = 0;
  bool labels_present = false;
  /// Ground truth for duplication experiments: representative id -> number of
  /// exact copies appended on top of the representative.
  std::map<std::int64_t, int> duplication_map;

  int size() const { return static_cast<int>(samples.size()); }
  int class_count() const;

  /// Bytewise-equality classes, each listed as ascending sample ids.
  /// Singletons included.
  std::vector<std::vector<std::int64_t>> equality_groups() const;

  /// True for every sample that belongs to a duplication group of total size
  /// >= min_group (representative and copies alike).
  std::vector<char> duplicated_mask(int min_group = 2) const;

  /// FNV-1a over the sample payload, labels and duplication table.
  std::uint64_t content_hash() const;

  void validate() const;
};

struct DupSpec {
  int component = 0;  // class / component / pattern-family index
  int copies = 0;     // exact copies to append
};

/// Gaussian mixture with exact-duplicate injections. Component means are
/// drawn in [-0.75, 0.75]^d with pairwise separation >= 0.8, samples are
/// mean + sigma * N(0, I) clamped to [-1, 1]. Labels are component indices.
Dataset gen_mixture(int components, int per_component, int d,
                    const std::vector<DupSpec>& dup_spec, std::uint64_t seed,
                    double sigma = 0.05);

/// Fractions of the three pattern families; normalized if they do not sum
/// to 1.
struct PatternMix {
  double flat = 1.0 / 3.0;
  double gradient = 1.0 / 3.0;
  double texture = 1.0 / 3.0;
};

/// Procedural grid images (d = grid * grid) spanning constant, linear-ramp
/// and high-frequency texture families. Labels are family indices
/// (0 = flat, 1 = gradient, 2 = texture).
Dataset gen_patterns(int count, int grid, const PatternMix& mix,
                     const std::vector<DupSpec>& dup_spec, std::uint64_t seed);

void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

void export_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace ietagc
