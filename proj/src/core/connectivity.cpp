#include "equips/connectivity.hpp"

#include "equips/error.hpp"

#include <array>
#include <cstdlib>
#include <numeric>
#include <vector>

namespace equips {

namespace {

struct Offset {
  int di, dj, dk;
};

// Neighbours already visited by an x-fastest raster scan.
std::vector<Offset> backward_offsets(Connectivity connectivity) {
  const int max_l1 = connectivity == Connectivity::faces   ? 1
                     : connectivity == Connectivity::edges ? 2
                                                           : 3;
  std::vector<Offset> out;
  for (int dk = -1; dk <= 1; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const int l1 = std::abs(di) + std::abs(dj) + std::abs(dk);
        if (l1 == 0 || l1 > max_l1)
          continue;
        const bool earlier = dk < 0 || (dk == 0 && dj < 0) || (dk == 0 && dj == 0 && di < 0);
        if (earlier)
          out.push_back({di, dj, dk});
      }
  return out;
}

class DisjointSet {
public:
  explicit DisjointSet(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller index becomes the root, so each root is the first voxel of
  // its component in scan order.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b)
      return;
    if (b < a)
      std::swap(a, b);
    parent_[b] = a;
  }

private:
  std::vector<std::size_t> parent_;
};

} // namespace

Connectivity connectivity_from_int(int neighbours) {
  switch (neighbours) {
  case 6:
    return Connectivity::faces;
  case 18:
    return Connectivity::edges;
  case 26:
    return Connectivity::corners;
  default:
    throw ValidationError("connectivity must be 6, 18 or 26, got " + std::to_string(neighbours));
  }
}

LabelGrid connected_components(const PhaseGrid &seg, Connectivity connectivity) {
  const GridShape &shape = seg.shape();
  const auto nx = static_cast<long>(shape.nx());
  const auto ny = static_cast<long>(shape.ny());
  const auto nz = static_cast<long>(shape.nz());
  const auto offsets = backward_offsets(connectivity);

  DisjointSet sets(shape.voxel_count());
  for (long k = 0; k < nz; ++k)
    for (long j = 0; j < ny; ++j)
      for (long i = 0; i < nx; ++i) {
        const std::size_t v = shape.index(i, j, k);
        if (!seg[v])
          continue;
        for (const auto &o : offsets) {
          const long ii = i + o.di, jj = j + o.dj, kk = k + o.dk;
          if (ii < 0 || jj < 0 || kk < 0 || ii >= nx || jj >= ny || kk >= nz)
            continue;
          const std::size_t w = shape.index(ii, jj, kk);
          if (seg[w])
            sets.unite(v, w);
        }
      }

  LabelGrid out{shape, std::vector<std::uint32_t>(shape.voxel_count(), 0), 0, {}};
  std::vector<std::uint32_t> root_label(shape.voxel_count(), 0);
  for (std::size_t v = 0; v < shape.voxel_count(); ++v) {
    if (!seg[v])
      continue;
    const std::size_t root = sets.find(v);
    if (root_label[root] == 0) {
      root_label[root] = static_cast<std::uint32_t>(++out.component_count);
      out.component_sizes.push_back(0);
    }
    out.labels[v] = root_label[root];
    ++out.component_sizes[root_label[root] - 1];
  }
  return out;
}

bool percolation_check(const PhaseGrid &seg, Axis axis, Connectivity connectivity) {
  const LabelGrid labels = connected_components(seg, connectivity);
  if (labels.component_count == 0)
    return false;
  const GridShape &shape = seg.shape();
  const int a = static_cast<int>(axis);
  const std::size_t last = shape.extent(axis) - 1;

  std::vector<std::uint8_t> touches(labels.component_count + 1, 0);
  for (std::size_t v = 0; v < shape.voxel_count(); ++v) {
    const std::uint32_t label = labels.labels[v];
    if (label == 0)
      continue;
    const std::size_t c = shape.coords(v)[a];
    if (c == 0)
      touches[label] |= 1;
    if (c == last)
      touches[label] |= 2;
  }
  for (std::uint8_t t : touches)
    if (t == 3)
      return true;
  return false;
}

} // namespace equips
