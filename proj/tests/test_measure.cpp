#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "skofbsde/errors.hpp"
#include "skofbsde/measure.hpp"
#include "skofbsde/normal.hpp"
#include "skofbsde/rng.hpp"
#include "skofbsde/verify.hpp"

using namespace skofbsde;

TEST_CASE("normal cdf and quantile reference values") {
  CHECK(norm_cdf(0.0) == 0.5);
  CHECK(std::fabs(norm_cdf(1.96) - 0.9750021048517795) < 1e-10);
  CHECK(std::fabs(norm_quantile(0.975) - 1.959963984540054) < 1e-10);
  CHECK(std::fabs(norm_quantile(1e-10) - (-6.361340902404057)) < 1e-9);
  CHECK(norm_quantile(0.5) == 0.0);
  CHECK_THROWS_AS(norm_quantile(0.0), DomainError);
  CHECK_THROWS_AS(norm_quantile(1.0), DomainError);
  for (double y = 1e-6; y < 1.0; y += 0.0123) {
    CHECK(std::fabs(norm_cdf(norm_quantile(y)) - y) < 1e-12);
  }
}

TEST_CASE("cdf examples") {
  CHECK(TargetMeasure::normal(0, 1).cdf(0.0) == doctest::Approx(0.5));
  CHECK(TargetMeasure::uniform(0, 1).cdf(0.25) == doctest::Approx(0.25));
  CHECK(TargetMeasure::empirical({1, 2, 3}).cdf(2.0) == doctest::Approx(2.0 / 3.0));
  const auto e = TargetMeasure::empirical({3, 1, 2});
  CHECK(e.cdf(0.999) == 0.0);
  CHECK(e.cdf(3.0) == 1.0);
}

TEST_CASE("quantile examples") {
  CHECK(TargetMeasure::uniform(0, 1).quantile(0.7) == doctest::Approx(0.7));
  CHECK(TargetMeasure::normal(2, 3).quantile(0.5) == doctest::Approx(2.0));
  CHECK(TargetMeasure::empirical({1, 2, 3}).quantile(0.5) == 2.0);
  // Left-continuous inverse: at an exact jump level the smaller point wins.
  CHECK(TargetMeasure::empirical({1, 2, 3, 4}).quantile(0.5) == 2.0);
  CHECK(TargetMeasure::empirical({2, 2, 5}).quantile(2.0 / 3.0) == 2.0);
  CHECK_THROWS_AS(TargetMeasure::uniform(0, 1).quantile(0.0), DomainError);
  CHECK_THROWS_AS(TargetMeasure::uniform(0, 1).quantile(1.0), DomainError);
}

TEST_CASE("piecewise cdf") {
  const auto m = TargetMeasure::piecewise_cdf({0, 1, 3}, {0, 0.5, 1});
  CHECK(m.cdf(-1) == 0.0);
  CHECK(m.cdf(0.5) == doctest::Approx(0.25));
  CHECK(m.cdf(2) == doctest::Approx(0.75));
  CHECK(m.quantile(0.75) == doctest::Approx(2.0));
  CHECK(m.mean() == doctest::Approx(0.5 * 0.5 + 0.5 * 2.0));
  CHECK_THROWS_AS(TargetMeasure::piecewise_cdf({0, 1}, {0, 0.9}), ConfigError);
  CHECK_THROWS_AS(TargetMeasure::piecewise_cdf({0, 0}, {0, 1}), ConfigError);
  CHECK_THROWS_AS(TargetMeasure::piecewise_cdf({0, 1, 2}, {0, 0.6, 0.5}), ConfigError);
}

TEST_CASE("composition and monotonicity on a probe grid") {
  const std::vector<TargetMeasure> ms = {
      TargetMeasure::normal(1, 2), TargetMeasure::uniform(-1, 3),
      TargetMeasure::piecewise_cdf({0, 1, 3}, {0, 0.5, 1}),
      TargetMeasure::empirical({0.3, -1, 2, 2, 7})};
  for (const auto& m : ms) {
    double prev = -INFINITY;
    for (int k = 1; k < 1000; ++k) {
      const double y = k / 1000.0;
      const double q = m.quantile(y);
      CHECK(m.cdf(q) >= y - 1e-12);
      CHECK(q >= prev);
      prev = q;
    }
  }
}

TEST_CASE("make_g for the parametric families") {
  const auto gn = make_g(TargetMeasure::normal(0, 1));
  CHECK(gn.map.lipschitz == 1.0);
  CHECK(gn(0.37) == doctest::Approx(0.37));
  const auto gs = make_g(TargetMeasure::normal(1.5, 2.0));
  CHECK(gs.map.lipschitz == 2.0);
  CHECK(gs(-0.5) == doctest::Approx(0.5));
  CHECK(gs.smoothness.L_g1.value() == 0.0);

  const auto gu = make_g(TargetMeasure::uniform(0, 1));
  CHECK(gu(0.0) == doctest::Approx(0.5));
  CHECK(gu.map.lipschitz == doctest::Approx(0.3989422804014327));
  CHECK(gu.smoothness.L_g1.value() == doctest::Approx(0.24197072451914334));
  // Grid maximum of Phi' agrees with the analytic constant.
  CHECK(std::fabs(probe_lipschitz(gu.map.value) - 0.3989422804014327) < 1e-6);
  for (double x = -8; x < 8; x += 0.01) CHECK(gu(x) <= gu(x + 0.01));
}

TEST_CASE("make_g rejects Dirac measures and flags non-Lipschitz quantiles") {
  CHECK_THROWS_AS(make_g(TargetMeasure::normal(0, 0)), ConfigError);
  CHECK_THROWS_AS(make_g(TargetMeasure::empirical({2, 2, 2})), ConfigError);
  CHECK_FALSE(make_g(TargetMeasure::empirical({1, 2, 3})).map.lipschitz_finite);
  // Flat interior segment of F = atom-free gap in the support: g jumps.
  CHECK_FALSE(make_g(TargetMeasure::piecewise_cdf({0, 1, 2, 3}, {0, 0.5, 0.5, 1}))
                  .map.lipschitz_finite);
  const auto gp = make_g(TargetMeasure::piecewise_cdf({0, 1, 3}, {0, 0.5, 1}));
  CHECK(gp.map.lipschitz_finite);
  CHECK(gp.smoothness.estimated);
  CHECK_FALSE(gp.warnings.empty());
  // g' = phi / f, largest at x = 0 where f = 1/4 on the upper segment.
  CHECK(gp.map.lipschitz == doctest::Approx(4 * 0.3989422804014327).epsilon(1e-3));
}

TEST_CASE("g transports the standard normal to the target") {
  const std::size_t N = 100000;
  std::vector<double> xi(N);
  NormalStream rng(derive_seed(99, 0));
  for (double& x : xi) x = rng.next_normal();
  const double band = 1.63 / std::sqrt(static_cast<double>(N)) + 1e-3;
  for (const auto& m : {TargetMeasure::uniform(0, 1), TargetMeasure::normal(-1, 0.5),
                        TargetMeasure::piecewise_cdf({0, 1, 3}, {0, 0.5, 1})}) {
    const auto g = make_g(m);
    std::vector<double> s(N);
    std::transform(xi.begin(), xi.end(), s.begin(), [&](double x) { return g(x); });
    std::sort(s.begin(), s.end());
    CHECK(ks_statistic(s, m) < band);
  }
}
