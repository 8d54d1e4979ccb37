#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace equips {

/// Locale-independent decimal text with `significant` digits ('.' separator).
std::string format_real(double value, int significant = 17);

/// Parses a whole field as a real number; nullopt on trailing garbage or
/// empty input. Locale-independent.
std::optional<double> parse_real(std::string_view text);

} // namespace equips
