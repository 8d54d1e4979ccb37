#pragma once

#include "equips/grid.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace equips {

using Vec3 = std::array<double, 3>;

/// Indexed triangle mesh in physical units. Triangles are wound
/// counter-clockwise when seen from outside, i.e. from the side where the
/// field is below the contour level.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  bool empty() const noexcept { return triangles.empty(); }
  /// Unit normal of triangle `t` from its winding; zero for degenerate triangles.
  Vec3 normal(std::size_t t) const;
  double area(std::size_t t) const;
};

/// Isosurface eps = level of the probability map by topology-resolving
/// marching cubes. Grid point (i, j, k) sits at (i dx, j dy, k dz). Vertices
/// are interpolated linearly along cell edges and shared between cells by
/// edge identity, so closed level sets give watertight meshes.
///
/// Requires 0 < level < 1 and at least 2 samples along each axis.
TriangleMesh marching_cubes(const ProbabilityMap &pmap, double level);

/// Same algorithm over an arbitrary scalar field; inside is value >= level.
TriangleMesh marching_cubes(const ScalarGrid &field, double level);

struct MeshStats {
  std::size_t vertex_count = 0;
  std::size_t triangle_count = 0;
  std::size_t edge_count = 0;
  double total_area = 0.0;
  /// Every edge is shared by exactly two triangles.
  bool watertight = false;
  long euler_characteristic = 0;
  /// Divergence-theorem volume; meaningful only for watertight meshes.
  double enclosed_volume = 0.0;
};

MeshStats mesh_stats(const TriangleMesh &mesh);

/// Wavefront OBJ text (vertices and faces only).
void write_obj(const TriangleMesh &mesh, const std::string &path);

} // namespace equips
