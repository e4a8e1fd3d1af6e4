#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace ietagc {

// All randomness in the framework flows from one base seed through
// derive_seed(base, label, indices...). Streams are independent per label and
// index tuple, so adding draws to one stream never shifts another. The
// generator is implemented here rather than taken from <random> because
// distribution results must be identical across standard libraries.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// xoshiro256** seeded via splitmix64, with Box-Muller normals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal draw.
  double normal();

  std::vector<double> normal_vec(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ietagc
