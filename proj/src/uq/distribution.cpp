#include "equips/distribution.hpp"

#include "equips/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace equips {

namespace {

constexpr double kPercentileMatch = 1e-9;

bool same_percentile(double a, double b) { return std::abs(a - b) <= kPercentileMatch; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Basis function of the quantile function, Q(p) = location + scale * g(p).
double basis(Family family, double p) {
  switch (family) {
  case Family::normal:
    return normal_quantile(p);
  case Family::half_cauchy:
    return std::tan(std::numbers::pi * p / 2.0);
  }
  return 0.0;
}

} // namespace

PercentileSampleSet::PercentileSampleSet(std::vector<PercentileSample> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty())
    throw ValidationError("percentile sample set is empty");
  for (const auto &s : samples_) {
    if (!(s.percentile >= 0.0 && s.percentile <= 100.0))
      throw ValidationError("percentile " + fmt(s.percentile) + " is outside [0, 100]");
    if (!std::isfinite(s.value))
      throw ValidationError("non-finite quantity at percentile " + fmt(s.percentile));
  }
  std::stable_sort(samples_.begin(), samples_.end(),
                   [](const auto &a, const auto &b) { return a.percentile < b.percentile; });
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (same_percentile(samples_[i - 1].percentile, samples_[i].percentile))
      throw ValidationError("duplicate percentile " + fmt(samples_[i].percentile));
  }
}

std::optional<double> PercentileSampleSet::value_at(double percentile) const {
  for (const auto &s : samples_)
    if (same_percentile(s.percentile, percentile))
      return s.value;
  return std::nullopt;
}

Family parse_family(const std::string &name) {
  if (name == "normal")
    return Family::normal;
  if (name == "half_cauchy" || name == "half-cauchy")
    return Family::half_cauchy;
  throw ValidationError("unknown distribution family '" + name + "'");
}

const char *family_name(Family family) {
  return family == Family::normal ? "normal" : "half_cauchy";
}

double CharacteristicDistribution::cdf(double x) const {
  return family == Family::normal ? normal_cdf(x, location, scale)
                                  : half_cauchy_cdf(x, location, scale);
}

double CharacteristicDistribution::quantile(double p) const {
  return family == Family::normal ? normal_quantile(p, location, scale)
                                  : half_cauchy_quantile(p, location, scale);
}

double CharacteristicDistribution::center() const {
  return family == Family::normal ? location : location + scale;
}

double normal_cdf(double x, double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ValidationError("normal_cdf needs sigma > 0");
  if (std::isnan(x))
    throw ValidationError("normal_cdf of NaN");
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

double normal_quantile(double p, double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ValidationError("normal_quantile needs sigma > 0");
  if (!(p > 0.0 && p < 1.0))
    throw ValidationError("normal_quantile needs 0 < p < 1, got " + fmt(p));

  // Acklam's rational approximation (relative error < 1.15e-9).
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double z;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley step against the erfc-based CDF.
  const double e = 0.5 * std::erfc(-z / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
  z -= u / (1.0 + 0.5 * z * u);

  return mu + sigma * z;
}

double half_cauchy_cdf(double x, double location, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ValidationError("half-Cauchy scale must be > 0");
  if (std::isnan(x))
    throw ValidationError("half_cauchy_cdf of NaN");
  if (x <= location)
    return 0.0;
  return 2.0 / std::numbers::pi * std::atan((x - location) / scale);
}

double half_cauchy_quantile(double p, double location, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ValidationError("half-Cauchy scale must be > 0");
  if (!(p >= 0.0 && p < 1.0))
    throw ValidationError("half_cauchy_quantile needs 0 <= p < 1, got " + fmt(p));
  return location + scale * std::tan(std::numbers::pi * p / 2.0);
}

CharacteristicDistribution fit_characteristic_normal(const PercentileSampleSet &samples) {
  const auto lo = samples.value_at(15.9);
  const auto mid = samples.value_at(50.0);
  const auto hi = samples.value_at(84.1);
  if (!lo || !mid || !hi) {
    std::string missing;
    if (!lo)
      missing += " 15.9";
    if (!mid)
      missing += " 50.0";
    if (!hi)
      missing += " 84.1";
    throw ValidationError("characteristic Normal fit is missing percentile(s):" + missing);
  }
  const double spread = *hi - *lo;
  if (!(spread > 0.0))
    throw ValidationError("non-monotone standard samples: value(84.1) - value(15.9) = " +
                          fmt(spread) + " gives sigma <= 0");
  const double z_spread = normal_quantile(0.841) - normal_quantile(0.159);
  return {Family::normal, *mid, spread / z_spread, 0.0};
}

CharacteristicDistribution fit_quantile_family(const PercentileSampleSet &samples, Family family) {
  if (samples.size() < 2)
    throw ValidationError("quantile-family fit needs at least 2 samples");
  const std::size_t n = samples.size();
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = samples[i].percentile / 100.0;
    const bool in_domain =
        family == Family::normal ? (p > 0.0 && p < 1.0) : (p >= 0.0 && p < 1.0);
    if (!in_domain)
      throw ValidationError(std::string("percentile ") + fmt(samples[i].percentile) +
                            " is outside the " + family_name(family) + " quantile domain");
    g[i] = basis(family, p);
  }

  double g_mean = 0.0, v_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g_mean += g[i];
    v_mean += samples[i].value;
  }
  g_mean /= static_cast<double>(n);
  v_mean /= static_cast<double>(n);

  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (g[i] - g_mean) * (g[i] - g_mean);
    sxy += (g[i] - g_mean) * (samples[i].value - v_mean);
  }
  if (!(sxx > 0.0))
    throw ValidationError("singular quantile-family design: percentiles do not vary");
  const double scale = sxy / sxx;
  const double location = v_mean - scale * g_mean;
  if (!(scale > 0.0))
    throw ValidationError("non-monotone samples: fitted scale " + fmt(scale) + " <= 0");

  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = samples[i].value - (location + scale * g[i]);
    rss += r * r;
  }
  return {family, location, scale, std::sqrt(rss)};
}

double goodness_of_fit(const PercentileSampleSet &samples, const CharacteristicDistribution &dist) {
  double worst = 0.0;
  for (const auto &s : samples.samples())
    worst = std::max(worst, std::abs(dist.cdf(s.value) - s.percentile / 100.0));
  return worst;
}

MonotonicityReport monotonicity_check(const PercentileSampleSet &samples) {
  if (samples.size() < 2)
    throw ValidationError("monotonicity check needs at least 2 samples");
  auto s = samples.samples();
  MonotonicityReport report;
  report.increasing = s.back().value >= s.front().value;
  for (std::size_t i = 1; i < s.size(); ++i) {
    const bool against = report.increasing ? s[i].value < s[i - 1].value
                                           : s[i].value > s[i - 1].value;
    if (against)
      report.violations.push_back(
          {s[i - 1].percentile, s[i - 1].value, s[i].percentile, s[i].value});
  }
  report.monotone = report.violations.empty();
  return report;
}

void QuantitySeries::validate() const {
  if (times.empty() || times.size() != values.size())
    throw ValidationError("series at percentile " + fmt(percentile) +
                          " needs equal, non-zero numbers of times and values");
  if (!(percentile >= 0.0 && percentile <= 100.0))
    throw ValidationError("series percentile " + fmt(percentile) + " outside [0, 100]");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
      throw ValidationError("non-finite entry in series at percentile " + fmt(percentile));
    if (i > 0 && !(times[i] > times[i - 1]))
      throw ValidationError("times must strictly increase in series at percentile " +
                            fmt(percentile));
  }
}

double QuantitySeries::interpolate(double t) const {
  if (t <= times.front())
    return values.front();
  if (t >= times.back())
    return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times[lo]) / (times[hi] - times[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

namespace {

const QuantitySeries *find_series(std::span<const QuantitySeries> series, double q) {
  for (const auto &s : series)
    if (same_percentile(s.percentile, q))
      return &s;
  return nullptr;
}

std::vector<EnvelopeViolation> band_violations(std::span<const QuantitySeries> series,
                                               const QuantitySeries &low,
                                               const QuantitySeries &high,
                                               const std::vector<double> &times) {
  std::vector<EnvelopeViolation> out;
  for (const auto &s : series) {
    if (!(s.percentile > low.percentile + kPercentileMatch &&
          s.percentile < high.percentile - kPercentileMatch))
      continue;
    for (double t : times) {
      const double a = low.interpolate(t);
      const double b = high.interpolate(t);
      const double lower = std::min(a, b);
      const double upper = std::max(a, b);
      const double v = s.interpolate(t);
      if (v < lower || v > upper)
        out.push_back({s.percentile, t, v, lower, upper});
    }
  }
  return out;
}

} // namespace

EnvelopeReport envelope_check(std::span<const QuantitySeries> series) {
  for (const auto &s : series)
    s.validate();
  const QuantitySeries *lo = find_series(series, 15.9);
  const QuantitySeries *mid = find_series(series, 50.0);
  const QuantitySeries *hi = find_series(series, 84.1);
  if (!lo || !mid || !hi)
    throw ValidationError("envelope check needs the 15.9, 50.0 and 84.1 percentile series");

  EnvelopeReport report;
  report.times = mid->times;
  report.sigma_violations = band_violations(series, *lo, *hi, report.times);
  const QuantitySeries *d10 = find_series(series, 10.0);
  const QuantitySeries *d90 = find_series(series, 90.0);
  if (d10 && d90) {
    report.has_decile_band = true;
    report.decile_violations = band_violations(series, *d10, *d90, report.times);
  }
  return report;
}

std::vector<double> suggest_percentiles(const PercentileSampleSet &samples,
                                        const CharacteristicDistribution &dist,
                                        double tolerance, std::size_t budget) {
  if (budget == 0 || goodness_of_fit(samples, dist) <= tolerance)
    return {};

  struct Gap {
    double lo, hi, score;
  };
  std::vector<std::pair<double, double>> knots; // (percentile, fitted cdf)
  knots.emplace_back(0.0, 0.0);
  for (const auto &s : samples.samples())
    knots.emplace_back(s.percentile, dist.cdf(s.value));
  knots.emplace_back(100.0, 1.0);

  std::vector<Gap> gaps;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const double width = (knots[i].first - knots[i - 1].first) / 100.0;
    if (width <= kPercentileMatch / 100.0)
      continue;
    const double mass_error = std::abs((knots[i].second - knots[i - 1].second) - width);
    if (mass_error <= 1e-12)
      continue;
    gaps.push_back({knots[i - 1].first, knots[i].first, mass_error / width});
  }
  std::stable_sort(gaps.begin(), gaps.end(),
                   [](const Gap &a, const Gap &b) { return a.score > b.score; });

  std::vector<double> out;
  for (const auto &gap : gaps) {
    if (out.size() == budget)
      break;
    const double mid = 0.5 * (gap.lo + gap.hi);
    if (mid <= 0.0 || mid >= 100.0 || samples.contains(mid))
      continue;
    out.push_back(mid);
  }
  return out;
}

EmpiricalCdf empirical_cdf(const PercentileSampleSet &samples) {
  EmpiricalCdf out;
  for (const auto &s : samples.samples())
    out.points.push_back({s.value, s.percentile / 100.0, s.percentile});
  std::stable_sort(out.points.begin(), out.points.end(),
                   [](const CdfPoint &a, const CdfPoint &b) { return a.value < b.value; });
  for (std::size_t i = 1; i < out.points.size(); ++i)
    if (out.points[i].percentile < out.points[i - 1].percentile)
      out.reordered = true;
  return out;
}

} // namespace equips
