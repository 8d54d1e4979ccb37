#pragma once

#include "equips/grid.hpp"

#include <cstdint>
#include <optional>
#include <variant>

namespace equips {

// Phantom geometry is expressed in voxel units; voxel (i, j, k) has its
// centre at (i + 0.5, j + 0.5, k + 0.5).

struct SphereGeometry {
  /// Defaults to the grid centre.
  std::optional<std::array<double, 3>> center;
  double radius = 8.0;
};

/// Inside where the coordinate along `axis` is below fraction * extent.
struct SlabGeometry {
  Axis axis = Axis::z;
  double fraction = 0.5;
};

/// Square channels of side `width` running along `axis`, repeated with
/// `period` in both transverse directions.
struct ChannelGeometry {
  Axis axis = Axis::z;
  double period = 8.0;
  double width = 4.0;
};

/// Spheres of `radius` on a simple cubic lattice with spacing `period`,
/// centred in each lattice cell.
struct LatticeGeometry {
  double period = 8.0;
  double radius = 3.0;
};

using PhantomGeometry = std::variant<SphereGeometry, SlabGeometry, ChannelGeometry, LatticeGeometry>;

struct PhantomSpec {
  PhantomGeometry geometry = SphereGeometry{};
  /// Half-width of the band around the interface where voxels may flip.
  double blur_width = 1.0;
  /// Per-voxel flip probability inside the band.
  double flip_noise = 0.0;
  std::uint64_t seed = 0;

  /// Throws ValidationError for degenerate geometry or out-of-range noise.
  void validate(const GridShape &shape) const;
};

/// Signed distance (voxel units) from the phantom interface, positive inside.
double phantom_signed_distance(const PhantomGeometry &geometry, const GridShape &shape,
                               std::size_t i, std::size_t j, std::size_t k);

struct SyntheticStack {
  SegmentationStack stack;
  PhaseGrid truth;
  /// Exact per-voxel inclusion probability implied by the noise model.
  ProbabilityMap probability;
};

/// N noisy segmentations of the phantom. Each sample flips every voxel with
/// |signed distance| <= blur_width independently with probability
/// flip_noise. Deterministic in (spec, n_samples, shape).
SyntheticStack synthetic_stack(const PhantomSpec &spec, std::size_t n_samples,
                               const GridShape &shape);

} // namespace equips
