#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace equips {

/// A physics-quantity value computed on one percentile segmentation.
struct PercentileSample {
  double percentile = 0.0;
  double value = 0.0;
};

/// Samples with unique percentiles, kept sorted by percentile.
class PercentileSampleSet {
public:
  /// Sorts by percentile. Throws ValidationError on an empty set, a
  /// non-finite value, a percentile outside [0, 100] or a duplicate
  /// percentile.
  explicit PercentileSampleSet(std::vector<PercentileSample> samples);

  std::span<const PercentileSample> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const PercentileSample &operator[](std::size_t i) const noexcept { return samples_[i]; }

  /// Value at `percentile` (matched to within 1e-9), if sampled.
  std::optional<double> value_at(double percentile) const;
  bool contains(double percentile) const { return value_at(percentile).has_value(); }

private:
  std::vector<PercentileSample> samples_;
};

enum class Family { normal, half_cauchy };

Family parse_family(const std::string &name);
const char *family_name(Family family);

/// Two-parameter distribution whose quantile function is linear in its
/// parameters: Q(p) = location + scale * g(p), with g the standard Normal
/// quantile or tan(pi p / 2) for the half-Cauchy.
struct CharacteristicDistribution {
  Family family = Family::normal;
  double location = 0.0; ///< mu for normal, x0 for half-Cauchy
  double scale = 1.0;    ///< sigma for normal, gamma for half-Cauchy
  /// Euclidean norm of the least-squares residual (0 for interpolating fits).
  double residual_norm = 0.0;

  double cdf(double x) const;
  double quantile(double p) const;
  /// Mean for the Normal, median for the half-Cauchy (whose mean does not exist).
  double center() const;
};

double normal_cdf(double x, double mu = 0.0, double sigma = 1.0);
/// Inverse of normal_cdf for 0 < p < 1.
double normal_quantile(double p, double mu = 0.0, double sigma = 1.0);

double half_cauchy_cdf(double x, double location, double scale);
double half_cauchy_quantile(double p, double location, double scale);

/// Normal characteristic distribution from the three standard segmentations:
/// mu is the 50.0 value, sigma the 15.9 to 84.1 spread divided by the
/// matching spread of the standard Normal quantiles.
CharacteristicDistribution fit_characteristic_normal(const PercentileSampleSet &samples);

/// Ordinary least squares of the quantile function over all samples.
CharacteristicDistribution fit_quantile_family(const PercentileSampleSet &samples, Family family);

/// max_i |F(value_i) - percentile_i / 100|.
double goodness_of_fit(const PercentileSampleSet &samples, const CharacteristicDistribution &dist);

struct MonotonicityViolation {
  double lower_percentile;
  double lower_value;
  double upper_percentile;
  double upper_value;
};

struct MonotonicityReport {
  bool monotone = true;
  bool increasing = true; ///< direction inferred from the end points
  std::vector<MonotonicityViolation> violations;
};

MonotonicityReport monotonicity_check(const PercentileSampleSet &samples);

/// A quantity that evolves in time, computed on one percentile segmentation.
struct QuantitySeries {
  double percentile = 0.0;
  std::vector<double> times;
  std::vector<double> values;

  /// Throws ValidationError unless lengths match, there is at least one
  /// point, times strictly increase and everything is finite.
  void validate() const;
  /// Piecewise-linear interpolation, held constant outside the time range.
  double interpolate(double t) const;
};

struct EnvelopeViolation {
  double percentile;
  double time;
  double value;
  double lower;
  double upper;
};

/// Bands formed by pairs of percentile series, checked on the time grid of
/// the 50.0 series. A band (qa, qb) is expected to contain every series with
/// qa < q < qb.
struct EnvelopeReport {
  std::vector<double> times;
  std::vector<EnvelopeViolation> sigma_violations;  ///< 15.9 / 84.1 band
  bool has_decile_band = false;
  std::vector<EnvelopeViolation> decile_violations; ///< 10 / 90 band
};

EnvelopeReport envelope_check(std::span<const QuantitySeries> series);

/// New percentiles to simulate when the fit is poor: midpoints of the gaps
/// between sampled percentiles (0 and 100 close the ends) whose fitted
/// probability mass departs most, relative to the gap width, from the gap's
/// percentile width. Empty when goodness_of_fit <= tolerance.
std::vector<double> suggest_percentiles(const PercentileSampleSet &samples,
                                        const CharacteristicDistribution &dist,
                                        double tolerance, std::size_t budget);

struct CdfPoint {
  double value;
  double probability; ///< percentile / 100
  double percentile;
};

struct EmpiricalCdf {
  std::vector<CdfPoint> points; ///< sorted by value
  /// True when sorting by value changed the percentile order, i.e. the
  /// quantity is not monotone in percentile.
  bool reordered = false;
};

EmpiricalCdf empirical_cdf(const PercentileSampleSet &samples);

} // namespace equips
