#include "equips/phantom.hpp"

#include "equips/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace equips {

namespace {

std::array<double, 3> voxel_center(std::size_t i, std::size_t j, std::size_t k) {
  return {static_cast<double>(i) + 0.5, static_cast<double>(j) + 0.5,
          static_cast<double>(k) + 0.5};
}

std::array<double, 3> grid_center(const GridShape &shape) {
  return {0.5 * static_cast<double>(shape.nx()), 0.5 * static_cast<double>(shape.ny()),
          0.5 * static_cast<double>(shape.nz())};
}

// Signed distance to an axis-aligned square of half-side h centred at the
// origin, positive inside.
double square_distance(double a, double b, double h) {
  const double qa = std::abs(a) - h;
  const double qb = std::abs(b) - h;
  const double outside = std::hypot(std::max(qa, 0.0), std::max(qb, 0.0));
  const double inside = std::min(std::max(qa, qb), 0.0);
  return -(outside + inside);
}

// Offset of x from the centre of its periodic cell.
double cell_offset(double x, double period) {
  return x - period * std::floor(x / period) - 0.5 * period;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits; identical on every platform.
double unit_draw(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Visitor {
  const GridShape &shape;
  std::array<double, 3> x;

  double operator()(const SphereGeometry &g) const {
    const auto c = g.center.value_or(grid_center(shape));
    return g.radius - std::hypot(x[0] - c[0], x[1] - c[1], x[2] - c[2]);
  }
  double operator()(const SlabGeometry &g) const {
    const int a = static_cast<int>(g.axis);
    return g.fraction * static_cast<double>(shape.extents()[a]) - x[a];
  }
  double operator()(const ChannelGeometry &g) const {
    const int a = static_cast<int>(g.axis);
    const int u = (a + 1) % 3, v = (a + 2) % 3;
    return square_distance(cell_offset(x[u], g.period), cell_offset(x[v], g.period),
                           0.5 * g.width);
  }
  double operator()(const LatticeGeometry &g) const {
    return g.radius - std::hypot(cell_offset(x[0], g.period), cell_offset(x[1], g.period),
                                 cell_offset(x[2], g.period));
  }
};

} // namespace

void PhantomSpec::validate(const GridShape &shape) const {
  if (!(flip_noise >= 0.0 && flip_noise <= 0.5))
    throw ValidationError("flip_noise must lie in [0, 0.5]");
  if (!(blur_width >= 0.0) || !std::isfinite(blur_width))
    throw ValidationError("blur_width must be >= 0");
  std::visit(
      [&](const auto &g) {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, SphereGeometry>) {
          const double half = 0.5 * static_cast<double>(std::min(
                                         {shape.nx(), shape.ny(), shape.nz()}));
          if (!(g.radius > 0.0))
            throw ValidationError("sphere radius must be > 0");
          if (g.radius >= half)
            throw ValidationError("sphere radius must be below half the smallest grid extent");
          const auto c = g.center.value_or(grid_center(shape));
          for (int d = 0; d < 3; ++d)
            if (!(c[d] >= 0.0 && c[d] <= static_cast<double>(shape.extents()[d])))
              throw ValidationError("sphere center lies outside the grid");
        } else if constexpr (std::is_same_v<G, SlabGeometry>) {
          if (!(g.fraction > 0.0 && g.fraction < 1.0))
            throw ValidationError("slab fraction must lie strictly between 0 and 1");
        } else if constexpr (std::is_same_v<G, ChannelGeometry>) {
          if (!(g.width > 0.0) || !(g.period > g.width))
            throw ValidationError("channels need 0 < width < period");
        } else {
          if (!(g.radius > 0.0) || !(g.period > 0.0))
            throw ValidationError("lattice needs positive period and radius");
        }
      },
      geometry);
}

double phantom_signed_distance(const PhantomGeometry &geometry, const GridShape &shape,
                               std::size_t i, std::size_t j, std::size_t k) {
  return std::visit(Visitor{shape, voxel_center(i, j, k)}, geometry);
}

SyntheticStack synthetic_stack(const PhantomSpec &spec, std::size_t n_samples,
                               const GridShape &shape) {
  spec.validate(shape);
  if (n_samples == 0)
    throw ValidationError("synthetic stack needs at least one sample");
  const std::size_t n = shape.voxel_count();
  std::vector<std::uint8_t> truth(n);
  std::vector<std::uint8_t> band(n);
  std::vector<double> probability(n);
  for (std::size_t k = 0; k < shape.nz(); ++k)
    for (std::size_t j = 0; j < shape.ny(); ++j)
      for (std::size_t i = 0; i < shape.nx(); ++i) {
        const std::size_t v = shape.index(i, j, k);
        const double d = phantom_signed_distance(spec.geometry, shape, i, j, k);
        truth[v] = d >= 0.0 ? 1 : 0;
        band[v] = std::abs(d) <= spec.blur_width ? 1 : 0;
        const double p_flip = band[v] ? spec.flip_noise : 0.0;
        probability[v] = truth[v] ? 1.0 - p_flip : p_flip;
      }

  std::vector<std::vector<std::uint8_t>> samples(n_samples, truth);
  if (spec.flip_noise > 0.0) {
    for (std::size_t s = 0; s < n_samples; ++s) {
      std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(s)));
      for (std::size_t v = 0; v < n; ++v)
        if (band[v] && unit_draw(rng) < spec.flip_noise)
          samples[s][v] ^= 1;
    }
  }
  return {SegmentationStack(shape, std::move(samples)), PhaseGrid(shape, std::move(truth)),
          ProbabilityMap(shape, std::move(probability))};
}

} // namespace equips
