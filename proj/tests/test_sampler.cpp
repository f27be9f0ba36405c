#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lcg/denoiser.hpp"
#include "lcg/errors.hpp"
#include "lcg/rng.hpp"
#include "lcg/sampler.hpp"
#include "lcg/schedule.hpp"
#include "lcg/world.hpp"
#include "test_util.hpp"

using namespace lcg;

namespace {

// One shared net fitted to an isotropic Gaussian world, reused by the
// statistical sampler tests in this suite.
struct GaussianFixture {
  WorldSpec world;
  NoiseSchedule s = make_schedule(60, 2e-3, 0.1);  // abar_T ~ 0.04, inside the terminal gate
  Denoiser net;

  GaussianFixture() {
    world.d = 2;
    world.components.push_back({{1.0, -2.0}, 1.0});
    world.validate();
    Rng rng(2024);
    AttributedDataset data = sample_dataset(world, 2000, rng);
    net = Denoiser::create(2, {48, 48}, Activation::Tanh, s, rng, 16);
    DenoiserTrainOptions opt;
    opt.steps = 6000;
    opt.batch = 32;
    train_denoiser(s, data, net, opt, rng);
  }

  static const GaussianFixture& get() {
    static GaussianFixture f;
    return f;
  }
};

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("score identity rescales predicted noise") {
  const NoiseSchedule s = make_schedule(4, 0.1, 0.4);

  // Direct check of score = -eps / sqrt(1 - abar_t) on the 4-step ramp.
  const Vec eps = {1.0, 0.0};
  const Vec sc = score_from_noise(s, eps, 2);  // 1 - 0.72 = 0.28
  CHECK(sc[0] == doctest::Approx(-1.0 / std::sqrt(0.28)).epsilon(1e-14));
  CHECK(sc[1] == 0.0);

  // abar = 0.75 makes the factor exactly -2.
  const NoiseSchedule s3 = make_schedule(1, 0.25, 0.25);
  const Vec sc3 = score_from_noise(s3, {1.0, 0.0}, 1);
  CHECK(sc3[0] == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(sc3[1] == 0.0);

  // Zero noise gives zero score; scaling is linear.
  const Vec zero = score_from_noise(s, {0.0, 0.0}, 3);
  CHECK(zero[0] == 0.0);
  const Vec twice = score_from_noise(s, {2.0, 0.0}, 2);
  CHECK(twice[0] == doctest::Approx(2.0 * sc[0]));
}

TEST_CASE("ddpm step with zero predicted noise follows the closed form") {
  const NoiseSchedule s = make_schedule(4, 0.1, 0.4);
  const Vec z_t = {2.0, -1.0};
  const Vec eps_hat = {0.0, 0.0};
  const Vec extra = {3.0, 1.0};
  const Vec xi = {0.0, 0.0};
  const int t = 3;  // a_3 = 0.7, post_var_3 = 0.3 * 0.28 / 0.496
  const Vec out = ddpm_step_with_noise(s, eps_hat, z_t, t, extra, xi);
  const double pv = 0.3 * 0.28 / 0.496;
  CHECK(out[0] == doctest::Approx(2.0 / std::sqrt(0.7) + pv * 3.0).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(-1.0 / std::sqrt(0.7) + pv * 1.0).epsilon(1e-14));
}

TEST_CASE("posterior mean interpolates exactly") {
  // mu = (z_t - b_t eps / sqrt(1 - abar_t)) / sqrt(a_t)
  const NoiseSchedule s = make_schedule(4, 0.1, 0.4);
  const Vec z_t = {1.0, 1.0};
  const Vec eps = {0.5, -0.5};
  const Vec mu = posterior_mean_from_eps(s, z_t, 2, eps);
  const double want0 = (1.0 - 0.2 * 0.5 / std::sqrt(0.28)) / std::sqrt(0.8);
  const double want1 = (1.0 + 0.2 * 0.5 / std::sqrt(0.28)) / std::sqrt(0.8);
  CHECK(mu[0] == doctest::Approx(want0).epsilon(1e-14));
  CHECK(mu[1] == doctest::Approx(want1).epsilon(1e-14));
}

TEST_CASE("ddim core reproduces the signal-rescaling example") {
  // eps_hat = 0, extra = 0, eta = 0: z' = sqrt(abar_prev / abar_t) z.
  const Vec out = ddim_step_core(0.25, 0.49, {0.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, 0.0, nullptr);
  CHECK(out[0] == doctest::Approx(1.4).epsilon(1e-14));
  CHECK(out[1] == 0.0);
}

TEST_CASE("ddim with eta = 0 is bit-deterministic") {
  const auto& f = GaussianFixture::get();
  const Vec z = {0.3, -0.8};
  const Vec extra = {0.1, 0.2};
  const Vec a = ddim_step(f.s, f.net, z, 20, extra, 0.0);
  const Vec b = ddim_step(f.s, f.net, z, 20, extra, 0.0);
  CHECK(a == b);
}

TEST_CASE("ddim at eta = 1 equals the ddpm ancestral step on a shared stream") {
  // Same eps_hat, same xi, no guidance: the eta = 1 DDIM mean and variance
  // coincide with the DDPM posterior, so the two updates agree to rounding.
  // (With guidance the two samplers inject the extra score differently, so
  // the identity only holds for the plain updates.)
  const NoiseSchedule s = make_schedule(8, 0.02, 0.3);
  Rng r1(99), r2(99);
  const Vec z_t = {0.7, -1.1};
  const Vec eps_hat = {0.4, 0.2};
  const Vec extra = {0.0, 0.0};
  for (int t = 2; t <= 8; ++t) {
    const Vec xi = r1.gaussian_vec(2);
    const Vec ddpm = ddpm_step_with_noise(s, eps_hat, z_t, t, extra, xi);
    const Vec ddim = ddim_step_core(s.abar(t), s.abar_prev(t), eps_hat, z_t, extra, 1.0, &r2);
    REQUIRE(ddim.size() == 2);
    CHECK(ddpm[0] == doctest::Approx(ddim[0]).epsilon(1e-12));
    CHECK(ddpm[1] == doctest::Approx(ddim[1]).epsilon(1e-12));
  }
}

TEST_CASE("the final reverse step adds no noise") {
  const auto& f = GaussianFixture::get();
  Rng r1(1), r2(777);  // distinct streams
  const Vec z1 = {0.2, 0.1};
  const Vec extra = {0.0, 0.0};
  const Vec a = ddpm_step(f.s, f.net, z1, 1, extra, r1);
  const Vec b = ddpm_step(f.s, f.net, z1, 1, extra, r2);
  CHECK(a == b);          // t = 1 ignores the rng
  CHECK(r1.counter() == 0);  // and consumes nothing

  const Vec c = ddpm_step(f.s, f.net, z1, 2, extra, r1);
  const Vec d = ddpm_step(f.s, f.net, z1, 2, extra, r2);
  CHECK(c != d);          // t >= 2 draws noise
}

TEST_CASE("unconditional samples recover the fitted Gaussian mean") {
  const auto& f = GaussianFixture::get();
  Rng rng(31337);
  const int n = 400;
  const auto samples = sample(f.s, f.net, n, SamplerKind::ddpm, {}, rng);
  REQUIRE(static_cast<int>(samples.size()) == n);
  double m0 = 0.0, m1 = 0.0;
  for (const auto& z : samples) {
    m0 += z[0];
    m1 += z[1];
  }
  m0 /= n;
  m1 /= n;
  // Crude 3-sigma band around the true mean (per-coordinate sd ~ 1).
  CHECK(std::abs(m0 - 1.0) < 3.0 / std::sqrt(static_cast<double>(n)) + 0.15);
  CHECK(std::abs(m1 + 2.0) < 3.0 / std::sqrt(static_cast<double>(n)) + 0.15);
}

TEST_CASE("ddim sampling tracks the predicted terminal-offset mean") {
  // eta = 0 is a deterministic, quantile-preserving flow started from
  // z_T ~ N(0, I), whereas the true terminal marginal has mean
  // sqrt(abar_T) mu. That offset is carried to the output (the data variance
  // is 1 here, so the terminal variance matches exactly), which predicts an
  // output mean of (1 - sqrt(abar_T)) mu rather than mu itself.
  const auto& f = GaussianFixture::get();
  Rng rng(4242);
  const auto samples = sample(f.s, f.net, 300, SamplerKind::ddim, {}, rng, 0.0);
  double m0 = 0.0, m1 = 0.0;
  for (const auto& z : samples) {
    m0 += z[0];
    m1 += z[1];
  }
  m0 /= static_cast<double>(samples.size());
  m1 /= static_cast<double>(samples.size());
  const double shrink = 1.0 - std::sqrt(f.s.abar(f.s.T));
  CHECK(std::abs(m0 - shrink * 1.0) < 0.3);
  CHECK(std::abs(m1 + shrink * 2.0) < 0.3);
}

TEST_CASE("sampling is reproducible and n = 0 yields nothing") {
  const auto& f = GaussianFixture::get();
  Rng r1(5), r2(5);
  const auto a = sample(f.s, f.net, 3, SamplerKind::ddpm, {}, r1);
  const auto b = sample(f.s, f.net, 3, SamplerKind::ddpm, {}, r2);
  CHECK(a == b);

  Rng r3(5);
  CHECK(sample(f.s, f.net, 0, SamplerKind::ddpm, {}, r3).empty());
}

TEST_CASE("noise-initialized sampling demands a near-Gaussian terminal") {
  const auto& f = GaussianFixture::get();
  const NoiseSchedule shallow = make_schedule(4, 0.1, 0.4);  // abar_4 = 0.3024
  Rng rng(6);
  CHECK_THROWS_AS((void)sample(shallow, f.net, 1, SamplerKind::ddpm, {}, rng),
                  std::invalid_argument);
}

TEST_CASE("diverging guidance trips the chain guard") {
  const auto& f = GaussianFixture::get();
  Rng rng(8);
  const GuidanceFn blowup = [](const Vec& z, int) { return Vec{1e12, 1e12 * (z[0] + 1.0)}; };
  CHECK_THROWS_AS((void)sample(f.s, f.net, 1, SamplerKind::ddpm, blowup, rng), NumericError);
}

TEST_CASE("reverse_chain_from starts mid-chain and keeps dimensions") {
  const auto& f = GaussianFixture::get();
  Rng rng(9);
  const Vec z10 = {0.5, 0.5};
  const Vec out = reverse_chain_from(f.s, f.net, z10, 10, SamplerKind::ddpm, {}, rng);
  REQUIRE(out.size() == 2);
  CHECK(all_finite(out));
  CHECK_THROWS_AS(
      (void)reverse_chain_from(f.s, f.net, z10, f.s.T + 1, SamplerKind::ddpm, {}, rng),
      std::invalid_argument);
}

TEST_CASE("sampler names round-trip") {
  CHECK(sampler_from_name("ddpm") == SamplerKind::ddpm);
  CHECK(sampler_from_name("ddim") == SamplerKind::ddim);
  CHECK(sampler_name(SamplerKind::ddim) == "ddim");
  CHECK_THROWS_AS(sampler_from_name("euler"), std::invalid_argument);
}

}  // TEST_SUITE
