#pragma once

#include "equips/grid.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace equips {

/// Per-voxel mean of the binary samples.
ProbabilityMap build_probability_map(const SegmentationStack &stack, int class_label = 1);

/// One-vs-rest probability map for `class_label` from a stack of exclusive
/// labelings (each sample holds one class id per voxel).
ProbabilityMap build_class_probability_map(const GridShape &shape,
                                           std::span<const std::vector<std::uint8_t>> labelings,
                                           int class_label);

/// u = 2 (0.5 - |eps - 0.5|): 1 where the class is a coin toss, 0 where certain.
ScalarGrid uncertainty_map(const ProbabilityMap &pmap);
double uncertainty(double epsilon);

/// t = 1 - q / 100. Larger percentiles give lower thresholds and therefore
/// larger segmentations.
double percentile_to_threshold(double percentile);

/// Voxels with eps >= t are inside. At t = 0 a voxel additionally needs
/// eps > 0, so an all-zero map thresholds to an empty segmentation.
PhaseGrid threshold_segmentation(const ProbabilityMap &pmap, double percentile);

/// The mu - sigma, mu and mu + sigma percentiles of a standard Normal.
constexpr std::array<double, 3> standard_percentiles() { return {15.9, 50.0, 84.1}; }

double volume_fraction(const PhaseGrid &seg);

} // namespace equips
