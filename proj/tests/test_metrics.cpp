#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "lcg/classifier.hpp"
#include "lcg/metrics.hpp"
#include "lcg/rng.hpp"
#include "lcg/vec.hpp"
#include "lcg/world.hpp"
#include "test_util.hpp"

namespace {

using namespace lcg;

Matrix diag2(double a, double b) {
  Matrix m(2, 2, 0.0);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Matrix identity(int d) {
  Matrix m(d, d, 0.0);
  for (int i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

// 2x2 congruence R m R^T for the rotation-invariance check.
Matrix rotate_cov(const Matrix& c, double theta) {
  const double r[2][2] = {{std::cos(theta), -std::sin(theta)}, {std::sin(theta), std::cos(theta)}};
  Matrix rc(2, 2, 0.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) rc(i, j) += r[i][k] * c(k, j);
  Matrix out(2, 2, 0.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) out(i, j) += rc(i, k) * r[j][k];
  return out;
}

Vec rotate_vec(const Vec& v, double theta) {
  return {std::cos(theta) * v[0] - std::sin(theta) * v[1],
          std::sin(theta) * v[0] + std::cos(theta) * v[1]};
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("frechet distance closed forms") {
    SUBCASE("identical moments give zero") {
      Matrix c(3, 3, 0.0);
      c(0, 0) = 2.0, c(1, 1) = 1.0, c(2, 2) = 1.5;
      c(0, 1) = c(1, 0) = 0.5;
      c(1, 2) = c(2, 1) = 0.2;
      const Vec m = {0.3, -1.0, 2.0};
      CHECK(latent_fid_moments(m, c, m, c) == doctest::Approx(0.0).epsilon(1e-8));
    }
    SUBCASE("unit-variance mean shift is the squared distance") {
      CHECK(latent_fid_moments({0.0}, identity(1), {3.0}, identity(1)) ==
            doctest::Approx(9.0).epsilon(1e-10));
    }
    SUBCASE("stddev 1 vs 2 at the same mean gives one") {
      Matrix c1(1, 1, 1.0), c2(1, 1, 4.0);
      // 1 + 4 - 2 sqrt(4) = 1.
      CHECK(latent_fid_moments({0.0}, c1, {0.0}, c2) == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("diagonal case sums per-axis terms") {
      // |dm|^2 = 2; traces 5 + 10; cross 2 (3 + 2) = 10.
      CHECK(latent_fid_moments({0.0, 0.0}, diag2(1.0, 4.0), {1.0, -1.0}, diag2(9.0, 1.0)) ==
            doctest::Approx(7.0).epsilon(1e-10));
    }
    SUBCASE("point masses reduce to the squared mean gap") {
      CHECK(latent_fid_moments({1.0, 2.0}, Matrix(2, 2, 0.0), {4.0, 6.0}, Matrix(2, 2, 0.0)) ==
            doctest::Approx(25.0).epsilon(1e-10));
    }
  }

  TEST_CASE("frechet distance is rotation invariant") {
    const Vec m1 = {0.4, -0.9};
    const Vec m2 = {1.3, 0.2};
    Matrix c1 = diag2(2.0, 0.5);
    c1(0, 1) = c1(1, 0) = 0.3;
    Matrix c2 = diag2(1.0, 3.0);
    c2(0, 1) = c2(1, 0) = -0.6;

    const double base = latent_fid_moments(m1, c1, m2, c2);
    for (double theta : {0.7, 2.1}) {
      const double rotated = latent_fid_moments(rotate_vec(m1, theta), rotate_cov(c1, theta),
                                                rotate_vec(m2, theta), rotate_cov(c2, theta));
      CHECK(rotated == doctest::Approx(base).epsilon(1e-9));
    }
  }

  TEST_CASE("frechet distance rejects bad inputs") {
    CHECK_THROWS_AS(latent_fid_moments({0.0, 0.0}, identity(2), {0.0}, identity(1)),
                    std::invalid_argument);
    Matrix indefinite(2, 2, 0.0);
    indefinite(0, 0) = indefinite(1, 1) = 1.0;
    indefinite(0, 1) = indefinite(1, 0) = 2.0;  // eigenvalues 3 and -1
    CHECK_THROWS_AS(latent_fid_moments({0.0, 0.0}, indefinite, {0.0, 0.0}, identity(2)),
                    std::invalid_argument);
  }

  TEST_CASE("sample moments match hand values") {
    const std::vector<Vec> zs = {{0.0, 0.0}, {2.0, 0.0}, {0.0, 2.0}, {2.0, 2.0}};
    const Vec m = sample_mean(zs);
    CHECK(m[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m[1] == doctest::Approx(1.0).epsilon(1e-15));

    const Matrix c = sample_covariance(zs);
    CHECK(c(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(c(1, 1) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK(c(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c(1, 0) == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(sample_mean({}), std::invalid_argument);
    CHECK_THROWS_AS(sample_covariance({{1.0, 2.0}}), std::invalid_argument);
  }

  TEST_CASE("fitted frechet distance needs d + 1 samples and tracks the truth") {
    CHECK_THROWS_AS(latent_fid({{0.0, 0.0}, {1.0, 1.0}}, {0.0, 0.0}, identity(2)),
                    std::invalid_argument);
    CHECK_NOTHROW(latent_fid({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}, {0.0, 0.0}, identity(2)));

    Rng rng(17);
    std::vector<Vec> zs;
    for (int i = 0; i < 4000; ++i) zs.push_back(rng.gaussian_vec(2));
    const double fid = latent_fid(zs, {0.0, 0.0}, identity(2));
    CHECK(fid >= 0.0);
    CHECK(fid < 0.02);  // moment-fit error decays like 1/n
  }

  TEST_CASE("oracle accuracy over explicit targets") {
    const WorldSpec w = standard_world(WorldPreset::quadrants2d);
    const std::vector<Vec> zs = {{1.0, 1.0}, {-1.0, 1.0}, {1.0, -1.0}};

    CHECK(acc(w, zs, {}).empty());
    CHECK(acc(w, {}, {}).empty());
    CHECK_THROWS_AS(acc(w, {}, {{"A", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(acc(w, zs, {{"nope", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(acc(w, zs, {{"A", 2}}), std::invalid_argument);

    const auto rows = acc(w, zs, {{"A", 1}, {"B", 0}});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].attribute == "A");
    CHECK(rows[0].accuracy == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(rows[1].attribute == "B");
    CHECK(rows[1].accuracy == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // The boundary itself counts as label 0.
    const auto edge = acc(w, {{0.0, 5.0}}, {{"A", 0}});
    CHECK(edge[0].accuracy == 1.0);
  }

  TEST_CASE("identity report distances and quantiles") {
    const auto rep = identity_distance({{0.0, 0.0}, {3.0, 4.0}}, {{1.0, 0.0}, {3.0, 4.0}});
    REQUIRE(rep.distances.size() == 2);
    CHECK(rep.distances[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rep.distances[1] == 0.0);
    CHECK(rep.mean == doctest::Approx(0.5).epsilon(1e-15));

    IdentityReport unsorted;
    unsorted.distances = {3.0, 1.0, 4.0, 2.0};  // quantile sorts internally
    CHECK(unsorted.quantile(0.0) == 1.0);
    CHECK(unsorted.quantile(1.0) == 4.0);
    CHECK(unsorted.quantile(0.5) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(unsorted.quantile(0.25) == doctest::Approx(1.75).epsilon(1e-12));
    CHECK_THROWS_AS(unsorted.quantile(1.5), std::invalid_argument);
    CHECK_THROWS_AS(IdentityReport{}.quantile(0.5), std::invalid_argument);

    CHECK_THROWS_AS(identity_distance({{0.0}}, {{0.0}, {1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(identity_distance({}, {}), std::invalid_argument);
  }

  TEST_CASE("linear edits on axis attributes do not disturb the others") {
    const WorldSpec w = standard_world(WorldPreset::axes8d);
    ClassifierSet heads;
    for (const auto& a : w.attributes)
      heads.emplace(a.name, LatentClassifier::linear_from(a.name, scaled(a.normal, 4.0), 0.0));

    // Shift per edit = alpha |w| / gamma = 6, enough to cross from any tail.
    const std::vector<EditStep> edits = {{"A", 6.0, 4.0}, {"B", 6.0, 4.0}};
    Rng rng(2026);
    const auto rep = disentanglement_report(w, nullptr, nullptr, heads, edits, 400, rng);

    REQUIRE(rep.attributes.size() == 3);
    REQUIRE(rep.edit_targets.size() == 2);
    CHECK(rep.edit_targets[0] == "A");
    CHECK(rep.edit_targets[1] == "B");
    REQUIRE(rep.deltas.rows == 2);
    REQUIRE(rep.deltas.cols == 3);
    REQUIRE(rep.targeted_acc.size() == 2);
    REQUIRE(rep.baseline_acc.size() == 3);

    // Uniform random targets match the oracle about half the time up front.
    for (double b : rep.baseline_acc) {
      CHECK(b > 0.4);
      CHECK(b < 0.6);
    }
    // The targeted attribute is fully steered; axis edits leave the rest
    // exactly alone, so the off-target drift is identically zero.
    CHECK(rep.targeted_acc[0] == 1.0);
    CHECK(rep.targeted_acc[1] == 1.0);
    CHECK(std::isnan(rep.deltas(0, 0)));
    CHECK(std::isnan(rep.deltas(1, 1)));
    CHECK(rep.deltas(0, 1) == 0.0);
    CHECK(rep.deltas(0, 2) == 0.0);
    CHECK(rep.deltas(1, 0) == 0.0);
    CHECK(rep.deltas(1, 2) == 0.0);
  }

  TEST_CASE("disentanglement report rejects malformed requests") {
    const WorldSpec w = standard_world(WorldPreset::axes8d);
    ClassifierSet heads;
    for (const auto& a : w.attributes)
      heads.emplace(a.name, LatentClassifier::linear_from(a.name, a.normal, 0.0));
    Rng rng(1);

    CHECK_THROWS_AS(disentanglement_report(w, nullptr, nullptr, heads, {{"A", 1.0, 1.0}}, 0, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(disentanglement_report(w, nullptr, nullptr, heads, {}, 10, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(disentanglement_report(w, nullptr, nullptr, heads, {{"nope", 1.0, 1.0}}, 10, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(disentanglement_report(w, nullptr, nullptr, heads, {{"A", 1.0, 1.0}}, 10, rng,
                                           EditMode::diffusion, 0),
                    std::invalid_argument);
  }
}
