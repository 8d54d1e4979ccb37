#include "equips/voxel.hpp"

#include "equips/error.hpp"

#include <cmath>
#include <sstream>

namespace equips {

ProbabilityMap build_probability_map(const SegmentationStack &stack, int class_label) {
  const std::size_t n = stack.shape().voxel_count();
  std::vector<std::uint32_t> counts(n, 0);
  for (std::size_t s = 0; s < stack.size(); ++s) {
    auto sample = stack.sample(s);
    for (std::size_t v = 0; v < n; ++v)
      counts[v] += sample[v];
  }
  // Integer counts: eps is independent of sample order.
  const double n_samples = static_cast<double>(stack.size());
  std::vector<double> eps(n);
  for (std::size_t v = 0; v < n; ++v)
    eps[v] = static_cast<double>(counts[v]) / n_samples;
  return ProbabilityMap(stack.shape(), std::move(eps), class_label);
}

ProbabilityMap build_class_probability_map(const GridShape &shape,
                                           std::span<const std::vector<std::uint8_t>> labelings,
                                           int class_label) {
  if (labelings.empty())
    throw ValidationError("labeling stack needs at least one sample");
  std::vector<std::vector<std::uint8_t>> binary;
  binary.reserve(labelings.size());
  for (std::size_t s = 0; s < labelings.size(); ++s) {
    if (labelings[s].size() != shape.voxel_count())
      throw ValidationError("labeling " + std::to_string(s) + " has " +
                            std::to_string(labelings[s].size()) + " voxels, expected " +
                            std::to_string(shape.voxel_count()));
    std::vector<std::uint8_t> b(labelings[s].size());
    for (std::size_t v = 0; v < b.size(); ++v)
      b[v] = labelings[s][v] == class_label ? 1 : 0;
    binary.push_back(std::move(b));
  }
  return build_probability_map(SegmentationStack(shape, std::move(binary)), class_label);
}

double uncertainty(double epsilon) { return 2.0 * (0.5 - std::abs(epsilon - 0.5)); }

ScalarGrid uncertainty_map(const ProbabilityMap &pmap) {
  auto eps = pmap.epsilon();
  std::vector<double> u(eps.size());
  for (std::size_t v = 0; v < eps.size(); ++v)
    u[v] = uncertainty(eps[v]);
  return ScalarGrid(pmap.shape(), std::move(u));
}

double percentile_to_threshold(double percentile) {
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    std::ostringstream os;
    os << "percentile " << percentile << " is outside [0, 100]";
    throw ValidationError(os.str());
  }
  return 1.0 - percentile / 100.0;
}

PhaseGrid threshold_segmentation(const ProbabilityMap &pmap, double percentile) {
  const double t = percentile_to_threshold(percentile);
  auto eps = pmap.epsilon();
  std::vector<std::uint8_t> inside(eps.size());
  if (t > 0.0) {
    for (std::size_t v = 0; v < eps.size(); ++v)
      inside[v] = eps[v] >= t ? 1 : 0;
  } else {
    for (std::size_t v = 0; v < eps.size(); ++v)
      inside[v] = eps[v] > 0.0 ? 1 : 0;
  }
  return PhaseGrid(pmap.shape(), std::move(inside), percentile, t);
}

double volume_fraction(const PhaseGrid &seg) {
  return static_cast<double>(seg.inside_count()) /
         static_cast<double>(seg.shape().voxel_count());
}

} // namespace equips
