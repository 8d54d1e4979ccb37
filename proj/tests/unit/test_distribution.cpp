#include "doctest.h"

#include "equips/distribution.hpp"
#include "equips/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace equips;

namespace {

PercentileSampleSet on_curve(std::initializer_list<double> percentiles, auto &&quantile) {
  std::vector<PercentileSample> s;
  for (double q : percentiles)
    s.push_back({q, quantile(q / 100.0)});
  return PercentileSampleSet(std::move(s));
}

PercentileSampleSet standard(double lo, double mid, double hi) {
  return PercentileSampleSet({{15.9, lo}, {50.0, mid}, {84.1, hi}});
}

QuantitySeries series(double q, std::vector<double> t, auto &&f) {
  QuantitySeries s{q, std::move(t), {}};
  for (double x : s.times)
    s.values.push_back(f(x));
  return s;
}

} // namespace

TEST_CASE("sample sets are sorted and validated") {
  const PercentileSampleSet s({{84.1, 3.0}, {15.9, 1.0}, {50.0, 2.0}});
  CHECK(s[0].percentile == 15.9);
  CHECK(s[2].percentile == 84.1);
  CHECK(s.value_at(50.0) == 2.0);
  CHECK_FALSE(s.contains(60.0));
  CHECK_THROWS_AS(PercentileSampleSet({}), ValidationError);
  CHECK_THROWS_AS(PercentileSampleSet({{50, 1.0}, {50, 2.0}}), ValidationError);
  CHECK_THROWS_AS(PercentileSampleSet({{101, 1.0}}), ValidationError);
  CHECK_THROWS_AS(PercentileSampleSet({{50, INFINITY}}), ValidationError);
}

TEST_CASE("normal cdf and quantile") {
  CHECK(normal_cdf(3.0, 3.0, 0.5) == 0.5);
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413).epsilon(1e-4));
  CHECK(normal_cdf(1.0) == doctest::Approx(0.841344746068543).epsilon(1e-14));
  double prev = 0.0;
  for (double x = -8.0; x <= 8.0; x += 0.01) {
    const double p = normal_cdf(x);
    CHECK(p >= prev);
    CHECK(p < 1.0);
    prev = p;
  }
  // Near p = 1 the double spacing of p itself limits the round trip to
  // about ulp(p) / pdf(x); beyond 5 sigma that exceeds 1e-9.
  for (int i = -120; i <= 120; ++i) {
    const double x = 0.05 * i;
    const double p = normal_cdf(x);
    const double back = normal_quantile(p);
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    const double resolution = (std::nextafter(p, 2.0) - p) / pdf;
    if (x <= 5.0)
      CHECK(std::abs(back - x) <= 1e-9);
    else
      CHECK(std::abs(back - x) <= 1e-9 + resolution);
    const double scaled = normal_quantile(normal_cdf(2.0 + 3.0 * x, 2.0, 3.0), 2.0, 3.0);
    CHECK(std::abs(scaled - (2.0 + 3.0 * x)) <= 3.0 * (1e-9 + resolution));
  }
  for (double p = 1e-12; p < 1.0; p = p < 0.5 ? p * 3 : 1 - (1 - p) / 3) {
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) <= 1e-9);
    if (1 - p < 1e-12)
      break;
  }
  CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
  CHECK_THROWS_AS(normal_cdf(0.0, 0.0, 0.0), ValidationError);
}

TEST_CASE("half-Cauchy cdf and quantile invert each other") {
  CHECK(half_cauchy_cdf(0.5, 0.5, 2.0) == 0.0);
  CHECK(half_cauchy_cdf(0.0, 0.5, 2.0) == 0.0);
  CHECK(half_cauchy_quantile(0.5, 1.0, 2.0) == doctest::Approx(3.0));
  for (double p = 0.01; p < 1.0; p += 0.01)
    CHECK(half_cauchy_cdf(half_cauchy_quantile(p, 1.0, 2.0), 1.0, 2.0) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("characteristic normal from the standard segmentations") {
  const auto d = fit_characteristic_normal(standard(8.0, 10.0, 12.0));
  CHECK(d.family == Family::normal);
  CHECK(d.location == 10.0);
  // The 15.9/84.1 spread corresponds to 2 * 0.99858 standard deviations.
  CHECK(d.scale == doctest::Approx(2.002851518559444).epsilon(1e-12));

  const auto exact = fit_characteristic_normal(
      on_curve({15.9, 50.0, 84.1}, [](double p) { return 3.0 + 0.5 * normal_quantile(p); }));
  CHECK(std::abs(exact.location - 3.0) <= 1e-12);
  CHECK(std::abs(exact.scale - 0.5) <= 1e-12);

  CHECK_THROWS_AS(fit_characteristic_normal(standard(10, 10, 10)), ValidationError);
  CHECK_THROWS_AS(fit_characteristic_normal(standard(12, 10, 8)), ValidationError);
  CHECK_THROWS_AS(fit_characteristic_normal(PercentileSampleSet({{15.9, 1}, {50, 2}})),
                  ValidationError);
}

TEST_CASE("characteristic normal is affine equivariant") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    double v[3] = {u(rng), u(rng), u(rng)};
    std::sort(v, v + 3);
    if (v[2] - v[0] < 1e-3)
      continue;
    const double a = std::abs(u(rng)) + 0.1, b = u(rng);
    const auto d0 = fit_characteristic_normal(standard(v[0], v[1], v[2]));
    const auto d1 = fit_characteristic_normal(standard(a * v[0] + b, a * v[1] + b, a * v[2] + b));
    CHECK(d1.location == doctest::Approx(a * d0.location + b).epsilon(1e-12));
    CHECK(d1.scale == doctest::Approx(a * d0.scale).epsilon(1e-12));
  }
}

TEST_CASE("least-squares quantile family fits") {
  const auto hc = fit_quantile_family(
      on_curve({5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 95},
               [](double p) { return 1.0 + 2.0 * std::tan(std::numbers::pi * p / 2.0); }),
      Family::half_cauchy);
  CHECK(std::abs(hc.location - 1.0) <= 1e-9);
  CHECK(std::abs(hc.scale - 2.0) <= 1e-9);

  // The standard Normal quantiles at 15.9 and 84.1 are symmetric, so the
  // scale estimates always agree and the locations agree on symmetric data.
  const auto three = standard(8.0, 10.0, 12.0);
  const auto ls = fit_quantile_family(three, Family::normal);
  const auto direct = fit_characteristic_normal(three);
  CHECK(ls.location == doctest::Approx(direct.location).epsilon(1e-12));
  CHECK(ls.scale == doctest::Approx(direct.scale).epsilon(1e-12));
  CHECK(ls.residual_norm <= 1e-12);
  const auto skew = standard(7.5, 10.0, 13.0);
  CHECK(fit_quantile_family(skew, Family::normal).scale ==
        doctest::Approx(fit_characteristic_normal(skew).scale).epsilon(1e-12));

  const auto two = fit_quantile_family(PercentileSampleSet({{20, 1.0}, {70, 4.0}}), Family::normal);
  CHECK(two.quantile(0.2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(two.quantile(0.7) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(two.residual_norm <= 1e-12);

  CHECK_THROWS_AS(fit_quantile_family(PercentileSampleSet({{50, 1.0}}), Family::normal),
                  ValidationError);
  CHECK_THROWS_AS(fit_quantile_family(PercentileSampleSet({{0, 1.0}, {50, 2.0}}), Family::normal),
                  ValidationError);
}

TEST_CASE("goodness of fit") {
  const CharacteristicDistribution n{Family::normal, 3.0, 0.5, 0.0};
  const auto own = on_curve({5, 15.9, 50, 84.1, 95}, [&](double p) { return n.quantile(p); });
  CHECK(goodness_of_fit(own, n) <= 1e-9);
  CHECK(goodness_of_fit(PercentileSampleSet({{50, 3.0}}), n) == 0.0);

  // Half-Cauchy samples against the Normal built from their standard three.
  const auto heavy = on_curve({5, 10, 15.9, 25, 50, 75, 84.1, 90, 95},
                              [](double p) { return std::tan(std::numbers::pi * p / 2.0); });
  const auto fit = fit_characteristic_normal(heavy);
  CHECK(fit.location == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit.scale == doctest::Approx(1.8352202422609414).epsilon(1e-12));
  const double D = goodness_of_fit(heavy, fit);
  CHECK(D == doctest::Approx(0.25783036231403095).epsilon(1e-10));
  CHECK(D > 0.05);
}

TEST_CASE("monotonicity report") {
  const auto up = monotonicity_check(PercentileSampleSet({{10, 1}, {50, 2}, {90, 3}}));
  CHECK(up.monotone);
  CHECK(up.increasing);
  const auto bump = monotonicity_check(PercentileSampleSet({{10, 1}, {50, 3}, {90, 2}}));
  CHECK_FALSE(bump.monotone);
  REQUIRE(bump.violations.size() == 1);
  CHECK(bump.violations[0].lower_value == 3);
  CHECK(bump.violations[0].upper_value == 2);
  const auto down = monotonicity_check(PercentileSampleSet({{10, 5}, {50, 4}, {90, 1}}));
  CHECK(down.monotone);
  CHECK_FALSE(down.increasing);
}

TEST_CASE("envelope of a monotone family has no violations") {
  std::vector<QuantitySeries> s;
  for (double q : {10.0, 15.9, 30.0, 50.0, 70.0, 84.1, 90.0})
    s.push_back(series(q, {0, 1, 2, 3, 4, 5}, [q](double t) { return q * (1 + t) + std::sin(t); }));
  const auto r = envelope_check(s);
  CHECK(r.sigma_violations.empty());
  CHECK(r.has_decile_band);
  CHECK(r.decile_violations.empty());
  CHECK(r.times.size() == 6);
}

TEST_CASE("envelope violations sit exactly on the constructed interval") {
  // 15.9 and 84.1 series are flat at 0 and 1; the 50.0 series sits at 0.9
  // and bulges above 1 on (2, 4) only. Time grid is 0, 0.5, ..., 6.
  std::vector<double> t;
  for (int i = 0; i <= 12; ++i)
    t.push_back(0.5 * i);
  std::vector<QuantitySeries> s{
      series(15.9, t, [](double) { return 0.0; }),
      series(84.1, t, [](double) { return 1.0; }),
      series(50.0, t, [](double x) { return 0.9 + 0.5 * std::max(0.0, -(x - 2.0) * (x - 4.0)); }),
  };
  const auto r = envelope_check(s);
  std::vector<double> at;
  for (const auto &v : r.sigma_violations) {
    CHECK(v.percentile == 50.0);
    CHECK(v.value > v.upper);
    at.push_back(v.time);
  }
  CHECK(at == std::vector<double>{2.5, 3.0, 3.5});
  CHECK_FALSE(r.has_decile_band);
}

TEST_CASE("envelope resamples onto the median time grid") {
  std::vector<QuantitySeries> s{
      series(15.9, {0, 10}, [](double) { return 0.0; }),
      series(84.1, {0, 10}, [](double x) { return x; }),
      series(50.0, {1, 2, 3}, [](double) { return 2.5; }),
  };
  const auto r = envelope_check(s);
  CHECK(r.times == std::vector<double>{1, 2, 3});
  REQUIRE(r.sigma_violations.size() == 2);
  CHECK(r.sigma_violations[0].time == 1);
  CHECK(r.sigma_violations[0].upper == doctest::Approx(1.0));
  CHECK(r.sigma_violations[1].time == 2);
}

TEST_CASE("single-time envelope is a scalar bound check") {
  std::vector<QuantitySeries> s{
      series(15.9, {0}, [](double) { return 1.0; }), series(50.0, {0}, [](double) { return 0.5; }),
      series(84.1, {0}, [](double) { return 2.0; }), series(30.0, {0}, [](double) { return 1.5; })};
  const auto r = envelope_check(s);
  REQUIRE(r.sigma_violations.size() == 1);
  CHECK(r.sigma_violations[0].percentile == 50.0);
  CHECK(r.sigma_violations[0].lower == 1.0);
  std::vector<QuantitySeries> missing{series(15.9, {0}, [](double) { return 1.0; }),
                                      series(50.0, {0}, [](double) { return 1.0; })};
  CHECK_THROWS_AS(envelope_check(missing), ValidationError);
}

TEST_CASE("percentile suggestions") {
  const CharacteristicDistribution n{Family::normal, 0.0, 1.0, 0.0};
  const auto exact = on_curve({15.9, 50, 84.1}, [&](double p) { return n.quantile(p); });
  CHECK(suggest_percentiles(exact, n, 0.05, 3).empty());

  // Mass above the 84.1 sample is missing entirely; the next worst gap is
  // 50 to 84.1.
  const PercentileSampleSet tail({{15.9, normal_quantile(0.159)}, {50, 0.0}, {84.1, 5.0}});
  const auto s = suggest_percentiles(tail, n, 0.05, 2);
  REQUIRE(s.size() == 2);
  CHECK(s[0] == doctest::Approx(92.05));
  CHECK(s[1] == doctest::Approx(67.05));
  CHECK(suggest_percentiles(tail, n, 0.05, 0).empty());

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PercentileSample> raw;
    for (int i = 0; i < 5; ++i) {
      const double q = std::round(u(rng) * 10) / 10;
      raw.push_back({q, u(rng)});
    }
    std::sort(raw.begin(), raw.end(), [](auto &a, auto &b) { return a.percentile < b.percentile; });
    raw.erase(std::unique(raw.begin(), raw.end(),
                          [](auto &a, auto &b) { return a.percentile == b.percentile; }),
              raw.end());
    const PercentileSampleSet set(raw);
    const auto out = suggest_percentiles(set, n, 0.0, 10);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i] > 0.0);
      CHECK(out[i] < 100.0);
      CHECK_FALSE(set.contains(out[i]));
      for (std::size_t j = 0; j < i; ++j)
        CHECK(out[i] != out[j]);
    }
  }
}

TEST_CASE("empirical cdf uses the percentile as the plotting position") {
  const auto c = empirical_cdf(standard(1, 2, 3));
  REQUIRE(c.points.size() == 3);
  CHECK(c.points[0].probability == doctest::Approx(0.159));
  CHECK(c.points[1].probability == 0.5);
  CHECK(c.points[2].probability == doctest::Approx(0.841));
  CHECK_FALSE(c.reordered);

  const auto r = empirical_cdf(standard(1, 3, 2));
  CHECK(r.reordered);
  CHECK(r.points[1].value == 2);
  CHECK(r.points[1].probability == doctest::Approx(0.841));

  const auto one = empirical_cdf(PercentileSampleSet({{50, 7.0}}));
  CHECK(one.points[0].value == 7.0);
  CHECK(one.points[0].probability == 0.5);
}
