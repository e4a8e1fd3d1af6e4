#include <cmath>
#include <vector>

#include "doctest.h"
#include "ietagc/errors.hpp"
#include "ietagc/schedule.hpp"

using namespace ietagc;

TEST_CASE("alpha is the running product of (1 - beta)") {
  const Schedule s = build_schedule(100, 1e-4, 0.02);
  REQUIRE(s.T == 100);
  REQUIRE(s.alpha.size() == 101);
  REQUIRE(s.beta.size() == 100);
  CHECK(s.alpha[0] == 1.0);
  long double prod = 1.0L;
  for (int t = 1; t <= s.T; ++t) {
    prod *= 1.0L - static_cast<long double>(s.beta[t - 1]);
    CHECK(std::abs(s.alpha[t] - static_cast<double>(prod)) < 1e-12);
  }
  for (int t = 1; t <= s.T; ++t) CHECK(s.alpha[t] < s.alpha[t - 1]);
}

TEST_CASE("betas are linear between beta_min and beta_max_used") {
  const Schedule s = build_schedule(50, 1e-4, 0.3);
  CHECK(s.beta.front() == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(s.beta.back() == doctest::Approx(s.beta_max_used).epsilon(1e-12));
  // Equal spacing.
  const double step = s.beta[1] - s.beta[0];
  for (std::size_t i = 1; i < s.beta.size(); ++i)
    CHECK(s.beta[i] - s.beta[i - 1] == doctest::Approx(step).epsilon(1e-9));
}

TEST_CASE("terminal alpha bound is enforced by raising beta_max") {
  // T=100 with the textbook 0.02 cap leaves alpha_T ~ 0.37, so the builder
  // must rescale.
  const Schedule s = build_schedule(100, 1e-4, 0.02);
  CHECK(s.alpha.back() <= 1e-4);
  CHECK(s.beta_max_adjusted);
  CHECK(s.beta_max_requested == 0.02);
  CHECK(s.beta_max_used > 0.02);
  CHECK(s.beta_max_used < 1.0);
  // Minimality: backing the cap off a hair violates the bound again.
  const Schedule tighter =
      build_schedule(100, 1e-4, s.beta_max_used * 0.999);
  CHECK(tighter.beta_max_used >= s.beta_max_used * 0.999);

  // A cap that already satisfies the bound is untouched.
  const Schedule loose = build_schedule(1000, 1e-4, 0.02);
  CHECK(loose.alpha.back() <= 1e-4);
  CHECK_FALSE(loose.beta_max_adjusted);
  CHECK(loose.beta_max_used == 0.02);
}

TEST_CASE("from_betas builds exact products and checks validity") {
  const Schedule s = Schedule::from_betas({0.1, 0.2, 0.3});
  CHECK(s.T == 3);
  CHECK(s.alpha[1] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.alpha[2] == doctest::Approx(0.9 * 0.8).epsilon(1e-15));
  CHECK(s.alpha[3] == doctest::Approx(0.9 * 0.8 * 0.7).epsilon(1e-15));
  CHECK_THROWS_AS(Schedule::from_betas({}), ConfigError);
  CHECK_THROWS_AS(Schedule::from_betas({0.0, 0.1}), ConfigError);
  CHECK_THROWS_AS(Schedule::from_betas({0.5, 1.0}), ConfigError);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(build_schedule(1, 1e-4, 0.02), ConfigError);
  CHECK_THROWS_AS(build_schedule(10, 0.0, 0.02), ConfigError);
  CHECK_THROWS_AS(build_schedule(10, 0.03, 0.02), ConfigError);
  CHECK_THROWS_AS(build_schedule(10, 1e-4, 1.0), ConfigError);
}
