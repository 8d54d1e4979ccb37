#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace equips {

enum class Axis : int { x = 0, y = 1, z = 2 };

Axis parse_axis(const std::string &name);
const char *axis_name(Axis axis);

/// Physical edge lengths of one voxel.
struct Spacing {
  double dx = 1.0;
  double dy = 1.0;
  double dz = 1.0;

  double along(Axis axis) const;
  bool operator==(const Spacing &) const = default;
};

/// Voxel counts and spacing of a regular 3-D grid.
///
/// Linear voxel order is x fastest, z slowest:
/// index(i, j, k) = i + nx * (j + ny * k). Every grid, file writer and
/// reader in the library uses this order.
class GridShape {
public:
  GridShape(std::size_t nx, std::size_t ny, std::size_t nz, Spacing spacing = {});

  std::size_t nx() const noexcept { return n_[0]; }
  std::size_t ny() const noexcept { return n_[1]; }
  std::size_t nz() const noexcept { return n_[2]; }
  std::size_t extent(Axis axis) const noexcept { return n_[static_cast<int>(axis)]; }
  const std::array<std::size_t, 3> &extents() const noexcept { return n_; }
  const Spacing &spacing() const noexcept { return spacing_; }
  std::size_t voxel_count() const noexcept { return n_[0] * n_[1] * n_[2]; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return i + n_[0] * (j + n_[1] * k);
  }
  std::array<std::size_t, 3> coords(std::size_t index) const noexcept {
    return {index % n_[0], (index / n_[0]) % n_[1], index / (n_[0] * n_[1])};
  }

  /// Same voxel counts; spacing is not compared.
  bool same_extents(const GridShape &other) const noexcept { return n_ == other.n_; }
  bool operator==(const GridShape &) const = default;

  std::string to_string() const;

private:
  std::array<std::size_t, 3> n_;
  Spacing spacing_;
};

/// Real value per voxel; all values finite.
class ScalarGrid {
public:
  ScalarGrid(GridShape shape, std::vector<double> values);
  explicit ScalarGrid(GridShape shape, double fill = 0.0);

  const GridShape &shape() const noexcept { return shape_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t index) const noexcept { return values_[index]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return values_[shape_.index(i, j, k)];
  }

private:
  GridShape shape_;
  std::vector<double> values_;
};

/// Per-voxel probability of membership in one class, 0 <= epsilon <= 1.
class ProbabilityMap {
public:
  ProbabilityMap(GridShape shape, std::vector<double> epsilon, int class_label = 1);

  const GridShape &shape() const noexcept { return shape_; }
  std::span<const double> epsilon() const noexcept { return epsilon_; }
  double operator[](std::size_t index) const noexcept { return epsilon_[index]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return epsilon_[shape_.index(i, j, k)];
  }
  int class_label() const noexcept { return class_label_; }

  ScalarGrid as_scalar_grid() const { return ScalarGrid(shape_, epsilon_); }

private:
  GridShape shape_;
  std::vector<double> epsilon_;
  int class_label_;
};

/// Binary segmentation (material vs complement), optionally tagged with the
/// percentile and threshold it was produced from.
class PhaseGrid {
public:
  PhaseGrid(GridShape shape, std::vector<std::uint8_t> inside,
            std::optional<double> percentile = std::nullopt,
            std::optional<double> threshold = std::nullopt);

  const GridShape &shape() const noexcept { return shape_; }
  std::span<const std::uint8_t> inside() const noexcept { return inside_; }
  bool operator[](std::size_t index) const noexcept { return inside_[index] != 0; }
  bool at(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return inside_[shape_.index(i, j, k)] != 0;
  }
  std::optional<double> percentile() const noexcept { return percentile_; }
  std::optional<double> threshold() const noexcept { return threshold_; }

  std::size_t inside_count() const noexcept;
  /// Same geometry with inside and outside swapped; tags are dropped.
  PhaseGrid complement() const;
  PhaseGrid with_spacing(Spacing spacing) const;

private:
  GridShape shape_;
  std::vector<std::uint8_t> inside_;
  std::optional<double> percentile_;
  std::optional<double> threshold_;
};

/// N binary Monte Carlo segmentations of the same volume.
class SegmentationStack {
public:
  /// Throws ValidationError naming the first sample whose voxel count differs
  /// from the first one, or that holds a value other than 0 or 1.
  SegmentationStack(GridShape shape, std::vector<std::vector<std::uint8_t>> samples);

  const GridShape &shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return samples_.size(); }
  std::span<const std::uint8_t> sample(std::size_t i) const noexcept { return samples_[i]; }

private:
  GridShape shape_;
  std::vector<std::vector<std::uint8_t>> samples_;
};

/// Connected-component labels; 0 is background, inside voxels carry 1..count.
struct LabelGrid {
  GridShape shape;
  std::vector<std::uint32_t> labels;
  std::size_t component_count = 0;
  /// sizes[c - 1] is the voxel count of component c.
  std::vector<std::size_t> component_sizes;
};

} // namespace equips
