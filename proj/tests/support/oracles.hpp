#pragma once

// Reference implementations used only by tests. They share no code with the
// library paths they check.

#include "equips/grid.hpp"
#include "equips/mesh.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <vector>

namespace equips::oracle {

/// Flood-fill labels (breadth-first, 0 = background). Component ids follow
/// the first voxel in raster order.
inline std::vector<int> flood_fill(const PhaseGrid &seg, int connectivity) {
  const auto &s = seg.shape();
  const int nx = static_cast<int>(s.nx()), ny = static_cast<int>(s.ny()),
            nz = static_cast<int>(s.nz());
  std::vector<int> label(s.voxel_count(), 0);
  int next = 0;
  std::vector<std::array<int, 3>> queue;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (!seg.at(i, j, k) || label[s.index(i, j, k)] != 0)
          continue;
        ++next;
        label[s.index(i, j, k)] = next;
        queue.assign(1, {i, j, k});
        for (std::size_t head = 0; head < queue.size(); ++head) {
          const auto [a, b, c] = queue[head];
          for (int dk = -1; dk <= 1; ++dk)
            for (int dj = -1; dj <= 1; ++dj)
              for (int di = -1; di <= 1; ++di) {
                const int l1 = std::abs(di) + std::abs(dj) + std::abs(dk);
                const int limit = connectivity == 6 ? 1 : connectivity == 18 ? 2 : 3;
                if (l1 == 0 || l1 > limit)
                  continue;
                const int x = a + di, y = b + dj, z = c + dk;
                if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz)
                  continue;
                const std::size_t w = s.index(x, y, z);
                if (seg[w] && label[w] == 0) {
                  label[w] = next;
                  queue.push_back({x, y, z});
                }
              }
        }
      }
  return label;
}

/// Number of mesh triangles crossed by the ray origin + t * dir, t > 0
/// (Moller-Trumbore).
inline int ray_crossings(const TriangleMesh &mesh, const Vec3 &origin, const Vec3 &dir) {
  int hits = 0;
  for (const auto &tri : mesh.triangles) {
    const Vec3 &p0 = mesh.vertices[tri[0]], &p1 = mesh.vertices[tri[1]],
               &p2 = mesh.vertices[tri[2]];
    const Vec3 e1{p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]};
    const Vec3 e2{p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]};
    const Vec3 pv{dir[1] * e2[2] - dir[2] * e2[1], dir[2] * e2[0] - dir[0] * e2[2],
                  dir[0] * e2[1] - dir[1] * e2[0]};
    const double det = e1[0] * pv[0] + e1[1] * pv[1] + e1[2] * pv[2];
    if (std::abs(det) < 1e-14)
      continue;
    const double inv = 1.0 / det;
    const Vec3 tv{origin[0] - p0[0], origin[1] - p0[1], origin[2] - p0[2]};
    const double u = (tv[0] * pv[0] + tv[1] * pv[1] + tv[2] * pv[2]) * inv;
    if (u < 0.0 || u > 1.0)
      continue;
    const Vec3 qv{tv[1] * e1[2] - tv[2] * e1[1], tv[2] * e1[0] - tv[0] * e1[2],
                  tv[0] * e1[1] - tv[1] * e1[0]};
    const double w = (dir[0] * qv[0] + dir[1] * qv[1] + dir[2] * qv[2]) * inv;
    if (w < 0.0 || u + w > 1.0)
      continue;
    const double t = (e2[0] * qv[0] + e2[1] * qv[1] + e2[2] * qv[2]) * inv;
    if (t > 0.0)
      ++hits;
  }
  return hits;
}

inline PhaseGrid random_phase(const GridShape &shape, double fill, std::mt19937_64 &rng) {
  std::bernoulli_distribution coin(fill);
  std::vector<std::uint8_t> v(shape.voxel_count());
  for (auto &x : v)
    x = coin(rng) ? 1 : 0;
  return PhaseGrid(shape, std::move(v));
}

inline ProbabilityMap random_pmap(const GridShape &shape, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(shape.voxel_count());
  for (auto &x : v)
    x = u(rng);
  return ProbabilityMap(shape, std::move(v));
}

} // namespace equips::oracle
