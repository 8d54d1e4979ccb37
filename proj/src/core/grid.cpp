#include "equips/grid.hpp"

#include "equips/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace equips {

Axis parse_axis(const std::string &name) {
  if (name == "x" || name == "X" || name == "0")
    return Axis::x;
  if (name == "y" || name == "Y" || name == "1")
    return Axis::y;
  if (name == "z" || name == "Z" || name == "2")
    return Axis::z;
  throw ValidationError("unknown axis '" + name + "' (expected x, y or z)");
}

const char *axis_name(Axis axis) {
  switch (axis) {
  case Axis::x:
    return "x";
  case Axis::y:
    return "y";
  case Axis::z:
    return "z";
  }
  return "?";
}

double Spacing::along(Axis axis) const {
  switch (axis) {
  case Axis::x:
    return dx;
  case Axis::y:
    return dy;
  case Axis::z:
    return dz;
  }
  return dx;
}

GridShape::GridShape(std::size_t nx, std::size_t ny, std::size_t nz, Spacing spacing)
    : n_{nx, ny, nz}, spacing_(spacing) {
  if (nx == 0 || ny == 0 || nz == 0)
    throw ValidationError("grid extents must be >= 1, got " + to_string());
  for (double h : {spacing.dx, spacing.dy, spacing.dz}) {
    if (!std::isfinite(h) || h <= 0.0)
      throw ValidationError("voxel spacing must be positive and finite");
  }
}

std::string GridShape::to_string() const {
  std::ostringstream os;
  os << n_[0] << "x" << n_[1] << "x" << n_[2];
  return os.str();
}

ScalarGrid::ScalarGrid(GridShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.voxel_count())
    throw ValidationError("scalar grid holds " + std::to_string(values_.size()) +
                          " values, shape " + shape_.to_string() + " needs " +
                          std::to_string(shape_.voxel_count()));
  auto bad = std::find_if(values_.begin(), values_.end(),
                          [](double v) { return !std::isfinite(v); });
  if (bad != values_.end())
    throw ValidationError("non-finite value at voxel " +
                          std::to_string(bad - values_.begin()));
}

ScalarGrid::ScalarGrid(GridShape shape, double fill)
    : ScalarGrid(shape, std::vector<double>(shape.voxel_count(), fill)) {}

ProbabilityMap::ProbabilityMap(GridShape shape, std::vector<double> epsilon, int class_label)
    : shape_(shape), epsilon_(std::move(epsilon)), class_label_(class_label) {
  if (epsilon_.size() != shape_.voxel_count())
    throw ValidationError("probability map holds " + std::to_string(epsilon_.size()) +
                          " values, shape " + shape_.to_string() + " needs " +
                          std::to_string(shape_.voxel_count()));
  for (std::size_t v = 0; v < epsilon_.size(); ++v) {
    // NaN fails both comparisons, so it is caught here as well.
    if (!(epsilon_[v] >= 0.0 && epsilon_[v] <= 1.0)) {
      std::ostringstream os;
      os << "probability " << epsilon_[v] << " at voxel " << v << " is outside [0, 1]";
      throw ValidationError(os.str());
    }
  }
}

PhaseGrid::PhaseGrid(GridShape shape, std::vector<std::uint8_t> inside,
                     std::optional<double> percentile, std::optional<double> threshold)
    : shape_(shape), inside_(std::move(inside)), percentile_(percentile),
      threshold_(threshold) {
  if (inside_.size() != shape_.voxel_count())
    throw ValidationError("phase grid holds " + std::to_string(inside_.size()) +
                          " voxels, shape " + shape_.to_string() + " needs " +
                          std::to_string(shape_.voxel_count()));
  for (std::size_t v = 0; v < inside_.size(); ++v) {
    if (inside_[v] > 1)
      throw ValidationError("phase grid value " + std::to_string(inside_[v]) +
                            " at voxel " + std::to_string(v) + " is not 0 or 1");
  }
  if (percentile_ && !(*percentile_ >= 0.0 && *percentile_ <= 100.0))
    throw ValidationError("percentile tag outside [0, 100]");
  if (threshold_ && !(*threshold_ >= 0.0 && *threshold_ <= 1.0))
    throw ValidationError("threshold tag outside [0, 1]");
  if (percentile_ && threshold_ && std::abs(*threshold_ - (1.0 - *percentile_ / 100.0)) > 1e-12)
    throw ValidationError("threshold tag does not match percentile tag");
}

std::size_t PhaseGrid::inside_count() const noexcept {
  return static_cast<std::size_t>(std::count(inside_.begin(), inside_.end(), std::uint8_t{1}));
}

PhaseGrid PhaseGrid::complement() const {
  std::vector<std::uint8_t> out(inside_.size());
  std::transform(inside_.begin(), inside_.end(), out.begin(),
                 [](std::uint8_t v) { return static_cast<std::uint8_t>(1 - v); });
  return PhaseGrid(shape_, std::move(out));
}

PhaseGrid PhaseGrid::with_spacing(Spacing spacing) const {
  return PhaseGrid(GridShape(shape_.nx(), shape_.ny(), shape_.nz(), spacing), inside_,
                   percentile_, threshold_);
}

SegmentationStack::SegmentationStack(GridShape shape,
                                     std::vector<std::vector<std::uint8_t>> samples)
    : shape_(shape), samples_(std::move(samples)) {
  if (samples_.empty())
    throw ValidationError("segmentation stack needs at least one sample");
  for (std::size_t s = 0; s < samples_.size(); ++s) {
    if (samples_[s].size() != shape_.voxel_count())
      throw ValidationError("sample " + std::to_string(s) + " has " +
                            std::to_string(samples_[s].size()) + " voxels, expected " +
                            std::to_string(shape_.voxel_count()) + " (" +
                            shape_.to_string() + ")");
    auto bad = std::find_if(samples_[s].begin(), samples_[s].end(),
                            [](std::uint8_t v) { return v > 1; });
    if (bad != samples_[s].end())
      throw ValidationError("sample " + std::to_string(s) + " is not binary at voxel " +
                            std::to_string(bad - samples_[s].begin()));
  }
}

} // namespace equips
