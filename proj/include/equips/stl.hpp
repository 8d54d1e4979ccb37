#pragma once

#include "equips/mesh.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace equips {

/// Binary STL layout: 80-byte header, uint32 triangle count, then 50 bytes
/// per triangle (normal, three vertices as float32, uint16 attribute).
inline constexpr std::size_t kStlHeaderBytes = 80;
inline constexpr std::size_t kStlTriangleBytes = 50;

std::size_t stl_file_size(std::size_t triangle_count);

/// Little-endian binary STL. Normals are recomputed from the vertex winding.
void write_stl(const TriangleMesh &mesh, const std::string &path);
std::vector<char> encode_stl(const TriangleMesh &mesh);

struct StlContents {
  /// Three unshared vertices per facet, in file order.
  TriangleMesh mesh;
  std::vector<std::array<float, 3>> normals;
};

StlContents read_stl(const std::string &path);

} // namespace equips
