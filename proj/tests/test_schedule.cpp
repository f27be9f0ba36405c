#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lcg/denoiser.hpp"
#include "lcg/rng.hpp"
#include "lcg/schedule.hpp"
#include "test_util.hpp"

using namespace lcg;

TEST_SUITE("schedule") {

TEST_CASE("four-step linear ramp matches hand-computed values") {
  const NoiseSchedule s = make_schedule(4, 0.1, 0.4);
  CHECK(s.b(1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.b(2) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(s.b(3) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s.b(4) == doctest::Approx(0.4).epsilon(1e-15));

  CHECK(s.abar(1) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.abar(2) == doctest::Approx(0.72).epsilon(1e-15));
  CHECK(s.abar(3) == doctest::Approx(0.504).epsilon(1e-15));
  CHECK(s.abar(4) == doctest::Approx(0.3024).epsilon(1e-15));

  // posterior_var_t = b_t (1 - abar_{t-1}) / (1 - abar_t); at t = 1 it is b_1.
  CHECK(s.post_var(1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.post_var(2) == doctest::Approx(0.2 * 0.1 / 0.28).epsilon(1e-14));
  CHECK(s.post_var(3) == doctest::Approx(0.3 * 0.28 / 0.496).epsilon(1e-14));
  CHECK(s.post_var(4) == doctest::Approx(0.4 * 0.496 / 0.6976).epsilon(1e-14));

  // This short ramp keeps too much signal for noise-initialized sampling.
  CHECK_FALSE(s.terminal_near_gaussian());
}

TEST_CASE("default-style schedule decays below the terminal threshold") {
  const NoiseSchedule s = make_schedule(100, 1e-3, 0.2);
  CHECK(s.T == 100);
  for (int t = 2; t <= s.T; ++t) {
    CHECK(s.abar(t) < s.abar(t - 1));
    CHECK(s.abar(t) > 0.0);
    CHECK(s.post_var(t) > 0.0);
    CHECK(s.post_var(t) < s.b(t));  // shrinkage: (1-abar_{t-1})/(1-abar_t) < 1
  }
  CHECK(s.terminal_near_gaussian());
  CHECK(s.abar(100) < 0.05);
}

TEST_CASE("T = 1 degenerates to a single step at b_start") {
  const NoiseSchedule s = make_schedule(1, 0.25, 0.9);
  CHECK(s.b(1) == doctest::Approx(0.25));
  CHECK(s.abar(1) == doctest::Approx(0.75));
  CHECK(s.abar_prev(1) == 1.0);
  CHECK(s.post_var(1) == doctest::Approx(0.25));
}

TEST_CASE("constructor validates its domain") {
  CHECK_THROWS_AS(make_schedule(0, 0.1, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(10, 0.0, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(make_schedule(10, 0.3, 0.2), std::invalid_argument);   // decreasing ramp
  CHECK_THROWS_AS(make_schedule(10, 0.1, 1.0), std::invalid_argument);   // b must stay below 1
  CHECK_THROWS_AS(make_schedule(10, -0.1, 0.2), std::invalid_argument);
}

TEST_CASE("closed-form corruption equals composed single steps, statistically") {
  // q(z_t|z0) has mean sqrt(abar_t) z0 and variance 1 - abar_t per coordinate.
  // Compose t single-step corruptions z_k = sqrt(1-b_k) z_{k-1} + sqrt(b_k) e
  // and compare moments against the closed form on 10^4 draws.
  const NoiseSchedule s = make_schedule(6, 0.05, 0.3);
  const Vec z0 = {1.2, -0.4};
  Rng rng(77);

  const int t = 6;
  const int n = 10000;
  std::vector<double> first(n);
  for (int i = 0; i < n; ++i) {
    Vec z = z0;
    for (int k = 1; k <= t; ++k) {
      const double keep = std::sqrt(1.0 - s.b(k));
      const double add = std::sqrt(s.b(k));
      for (auto& v : z) v = keep * v + add * rng.next_gaussian();
    }
    first[i] = z[0];
  }
  const double want_mean = std::sqrt(s.abar(t)) * z0[0];
  const double want_var = 1.0 - s.abar(t);
  const double se_mean = std::sqrt(want_var / n);
  CHECK(std::abs(lcg::test::mean(first) - want_mean) < 3.0 * se_mean);
  CHECK(std::abs(lcg::test::variance(first) - want_var) < 3.0 * want_var * std::sqrt(2.0 / n));

  // And corrupt_with_noise implements exactly the closed form.
  const Vec eps = {0.5, -1.0};
  const Vec zt = corrupt_with_noise(s, z0, t, eps);
  CHECK(zt[0] == doctest::Approx(std::sqrt(s.abar(t)) * z0[0] + std::sqrt(1 - s.abar(t)) * 0.5));
  CHECK(zt[1] == doctest::Approx(std::sqrt(s.abar(t)) * z0[1] - std::sqrt(1 - s.abar(t)) * 1.0));
}

TEST_CASE("forward_sample draws fresh noise with matching shape") {
  const NoiseSchedule s = make_schedule(10, 0.01, 0.2);
  Rng rng(5);
  const Vec z0 = {0.0, 0.0, 0.0};
  const auto [zt, eps] = forward_sample(s, z0, 10, rng);
  REQUIRE(zt.size() == 3);
  REQUIRE(eps.size() == 3);
  for (int j = 0; j < 3; ++j)
    CHECK(zt[j] == doctest::Approx(std::sqrt(1 - s.abar(10)) * eps[j]));
}

}  // TEST_SUITE
