#pragma once

#include "equips/distribution.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace equips {

/// Header of the distribution CSV written by write_distribution_csv.
inline constexpr const char *kDistributionCsvHeader =
    "percentile,threshold,quantity,normalized_quantity,fit_cdf";

/// One row per sample in percentile order. Reals use 17 significant digits,
/// '.' decimals and LF line endings. Without a fit the last two columns are
/// empty; with one, normalized_quantity = quantity / fit.center().
std::string format_distribution_csv(const PercentileSampleSet &samples,
                                    const std::optional<CharacteristicDistribution> &fit);
void write_distribution_csv(const PercentileSampleSet &samples,
                            const std::optional<CharacteristicDistribution> &fit,
                            const std::string &path);

/// Either `percentile,quantity` rows or `percentile,time,value` rows grouped
/// into one series per percentile (sorted by percentile, then time).
using QuantityTable = std::variant<PercentileSampleSet, std::vector<QuantitySeries>>;

/// Throws ValidationError naming the line for malformed rows, an unknown
/// header, duplicate percentiles (scalar files) or duplicate times.
QuantityTable read_quantity_csv(const std::string &path);
QuantityTable parse_quantity_csv(const std::string &text, const std::string &source = "<text>");

} // namespace equips
