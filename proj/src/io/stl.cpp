#include "equips/stl.hpp"

#include "equips/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace equips {

namespace {

constexpr char kHeaderText[] = "binary STL written by equips";

void put_f32(std::vector<char> &out, double v) {
  const float f = static_cast<float>(v);
  char b[4];
  std::memcpy(b, &f, 4);
  out.insert(out.end(), b, b + 4);
}

float get_f32(const char *p) {
  float f;
  std::memcpy(&f, p, 4);
  return f;
}

} // namespace

std::size_t stl_file_size(std::size_t triangle_count) {
  return kStlHeaderBytes + 4 + kStlTriangleBytes * triangle_count;
}

std::vector<char> encode_stl(const TriangleMesh &mesh) {
  static_assert(std::endian::native == std::endian::little);
  if (mesh.triangles.size() > 0xffffffffULL)
    throw ValidationError("too many triangles for binary STL");
  std::vector<char> out(kStlHeaderBytes, '\0');
  std::memcpy(out.data(), kHeaderText, sizeof kHeaderText - 1);
  const auto count = static_cast<std::uint32_t>(mesh.triangles.size());
  char c[4];
  std::memcpy(c, &count, 4);
  out.insert(out.end(), c, c + 4);
  out.reserve(stl_file_size(count));
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3 n = mesh.normal(t);
    for (double v : n)
      put_f32(out, v);
    for (std::uint32_t idx : mesh.triangles[t]) {
      if (idx >= mesh.vertices.size())
        throw ValidationError("triangle " + std::to_string(t) + " references missing vertex");
      for (double v : mesh.vertices[idx])
        put_f32(out, v);
    }
    out.push_back('\0');
    out.push_back('\0');
  }
  return out;
}

void write_stl(const TriangleMesh &mesh, const std::string &path) {
  const std::vector<char> bytes = encode_stl(mesh);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError(path, "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError(path, "write failed");
}

StlContents read_stl(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(path, "cannot open for reading");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (bytes.size() < kStlHeaderBytes + 4)
    throw IoError(path, "file too short for a binary STL header");
  std::uint32_t count;
  std::memcpy(&count, bytes.data() + kStlHeaderBytes, 4);
  if (bytes.size() != stl_file_size(count))
    throw IoError(path, "size " + std::to_string(bytes.size()) + " does not match " +
                            std::to_string(count) + " triangles (expected " +
                            std::to_string(stl_file_size(count)) + ")");
  StlContents out;
  const char *p = bytes.data() + kStlHeaderBytes + 4;
  for (std::uint32_t t = 0; t < count; ++t, p += kStlTriangleBytes) {
    out.normals.push_back({get_f32(p), get_f32(p + 4), get_f32(p + 8)});
    std::array<std::uint32_t, 3> tri;
    for (int v = 0; v < 3; ++v) {
      const char *q = p + 12 + 12 * v;
      out.mesh.vertices.push_back({get_f32(q), get_f32(q + 4), get_f32(q + 8)});
      tri[v] = static_cast<std::uint32_t>(out.mesh.vertices.size() - 1);
    }
    out.mesh.triangles.push_back(tri);
  }
  return out;
}

} // namespace equips
