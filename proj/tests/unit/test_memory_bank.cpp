#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "ietagc/errors.hpp"
#include "ietagc/memory_bank.hpp"
#include "ietagc/rng.hpp"

using namespace ietagc;

TEST_CASE("EMA matches the unrolled recursion per timestep") {
  Rng rng(314);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 1 + static_cast<int>(rng.uniform_int(20));
    const double gamma = 0.05 + 0.9 * rng.uniform();
    MemoryBank bank(T, gamma);
    std::map<int, double> reference;  // t -> unrolled EMA
    const int updates = static_cast<int>(rng.uniform_int(60));
    for (int u = 0; u < updates; ++u) {
      const int t = 1 + static_cast<int>(rng.uniform_int(T));
      const double loss = 10.0 * rng.uniform();
      bank.update(t, loss);
      const double prev = reference.count(t) ? reference[t] : 0.0;
      reference[t] = gamma * prev + (1.0 - gamma) * loss;
    }
    for (int t = 1; t <= T; ++t) {
      const double want = reference.count(t) ? reference[t] : 0.0;
      CHECK(std::abs(bank.value(t) - want) <= 1e-12);
    }
  }
}

TEST_CASE("zero bank never triggers a skip") {
  MemoryBank bank(10, 0.8);
  std::vector<MaskEntry> entries;
  for (int i = 0; i < 20; ++i)
    entries.push_back({i, 1 + (i % 10), static_cast<double>(i)});
  std::vector<SkipRecord> skips;
  std::vector<char> mask;
  const auto masked = bank.apply_mask(entries, 0.9, 0, &skips, &mask);
  CHECK(skips.empty());
  for (char m : mask) CHECK(m == 0);
  for (std::size_t i = 0; i < entries.size(); ++i)
    CHECK(masked[i] == entries[i].loss);
  // ratio against an empty slot is the +inf sentinel, even for zero loss.
  CHECK(std::isinf(bank.ratio(1.0, 3)));
  CHECK(std::isinf(bank.ratio(0.0, 3)));
}

TEST_CASE("masking is strict and leaves the bank unchanged") {
  MemoryBank bank(5, 0.5);
  bank.update(2, 4.0);  // l[2] = 2.0
  CHECK(bank.value(2) == doctest::Approx(2.0).epsilon(1e-15));

  // loss 1.0 against l = 2.0 gives ratio exactly 0.5.
  std::vector<MaskEntry> entries = {{0, 2, 1.0}, {1, 2, 0.999}, {2, 2, 1.001}};
  std::vector<SkipRecord> skips;
  std::vector<char> mask;
  const auto masked = bank.apply_mask(entries, 0.5, 7, &skips, &mask);

  CHECK(mask[0] == 0);  // ratio == lambda is NOT a skip
  CHECK(mask[1] == 1);  // ratio < lambda
  CHECK(mask[2] == 0);
  CHECK(masked[0] == 1.0);
  CHECK(masked[1] == 0.0);
  CHECK(masked[2] == 1.001);
  REQUIRE(skips.size() == 1);
  CHECK(skips[0].sample_id == 1);
  CHECK(skips[0].epoch == 7);
  CHECK(skips[0].t == 2);
  CHECK(skips[0].loss == 0.999);
  CHECK(skips[0].ratio == doctest::Approx(0.999 / 2.0).epsilon(1e-15));

  // apply_mask is pure: the bank still holds the pre-batch value.
  CHECK(bank.value(2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(bank.update_counts()[1] == 1);
}

TEST_CASE("verdicts are order-independent within a batch") {
  MemoryBank bank(4, 0.7);
  bank.update(1, 2.0);
  bank.update(3, 5.0);
  std::vector<MaskEntry> fwd = {{0, 1, 0.1}, {1, 3, 9.0}, {2, 1, 3.0}, {3, 3, 0.2}};
  std::vector<MaskEntry> rev(fwd.rbegin(), fwd.rend());
  std::vector<char> m1, m2;
  bank.apply_mask(fwd, 0.6, 0, nullptr, &m1);
  bank.apply_mask(rev, 0.6, 0, nullptr, &m2);
  REQUIRE(m1.size() == m2.size());
  for (std::size_t i = 0; i < m1.size(); ++i)
    CHECK(m1[i] == m2[m2.size() - 1 - i]);
}

TEST_CASE("lambda = 0 disables skipping entirely") {
  MemoryBank bank(3, 0.5);
  bank.update(1, 100.0);
  std::vector<MaskEntry> entries = {{0, 1, 1e-12}};
  std::vector<SkipRecord> skips;
  bank.apply_mask(entries, 0.0, 0, &skips, nullptr);
  CHECK(skips.empty());  // ratio < 0 is impossible
}

TEST_CASE("update counts accumulate per timestep") {
  MemoryBank bank(3, 0.5);
  bank.update(1, 1.0);
  bank.update(1, 2.0);
  bank.update(3, 1.0);
  CHECK(bank.update_counts()[0] == 2);
  CHECK(bank.update_counts()[1] == 0);
  CHECK(bank.update_counts()[2] == 1);
}

TEST_CASE("validation errors") {
  CHECK_THROWS_AS(MemoryBank(0, 0.5), ConfigError);
  CHECK_THROWS_AS(MemoryBank(5, 0.0), ConfigError);
  CHECK_THROWS_AS(MemoryBank(5, 1.0), ConfigError);
  MemoryBank bank(5, 0.5);
  CHECK_THROWS_AS(bank.update(0, 1.0), ShapeError);
  CHECK_THROWS_AS(bank.update(6, 1.0), ShapeError);
  CHECK_THROWS_AS(bank.update(1, -1.0), NumericalError);
  CHECK_THROWS_AS(bank.update(1, std::nan("")), NumericalError);
  CHECK_THROWS_AS(bank.value(0), ShapeError);
  std::vector<MaskEntry> e = {{0, 1, 1.0}};
  CHECK_THROWS_AS(bank.apply_mask(e, -0.1, 0, nullptr, nullptr), ConfigError);
}
