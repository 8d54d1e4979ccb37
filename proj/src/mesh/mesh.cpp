#include "equips/mesh.hpp"

#include "equips/error.hpp"
#include "equips/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <utility>

namespace equips {

namespace {

Vec3 sub(const Vec3 &a, const Vec3 &b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3 cross(const Vec3 &a, const Vec3 &b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3 &a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

} // namespace

Vec3 TriangleMesh::normal(std::size_t t) const {
  const auto &tri = triangles[t];
  const Vec3 n = cross(sub(vertices[tri[1]], vertices[tri[0]]),
                       sub(vertices[tri[2]], vertices[tri[0]]));
  const double len = norm(n);
  if (len == 0.0)
    return {0.0, 0.0, 0.0};
  return {n[0] / len, n[1] / len, n[2] / len};
}

double TriangleMesh::area(std::size_t t) const {
  const auto &tri = triangles[t];
  return 0.5 * norm(cross(sub(vertices[tri[1]], vertices[tri[0]]),
                          sub(vertices[tri[2]], vertices[tri[0]])));
}

MeshStats mesh_stats(const TriangleMesh &mesh) {
  MeshStats stats;
  stats.triangle_count = mesh.triangles.size();

  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  std::vector<std::uint8_t> used(mesh.vertices.size(), 0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto &tri = mesh.triangles[t];
    for (int c = 0; c < 3; ++c) {
      if (tri[c] >= mesh.vertices.size())
        throw ValidationError("triangle " + std::to_string(t) + " references vertex " +
                              std::to_string(tri[c]) + " out of range");
      used[tri[c]] = 1;
      const std::uint32_t a = tri[c], b = tri[(c + 1) % 3];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
    stats.total_area += mesh.area(t);
    const Vec3 &p0 = mesh.vertices[tri[0]];
    const Vec3 &p1 = mesh.vertices[tri[1]];
    const Vec3 &p2 = mesh.vertices[tri[2]];
    const Vec3 c = cross(p1, p2);
    stats.enclosed_volume += (p0[0] * c[0] + p0[1] * c[1] + p0[2] * c[2]) / 6.0;
  }
  stats.vertex_count = static_cast<std::size_t>(std::count(used.begin(), used.end(), 1));
  stats.edge_count = edges.size();
  stats.watertight = !edges.empty() && std::all_of(edges.begin(), edges.end(),
                                                   [](const auto &e) { return e.second == 2; });
  stats.euler_characteristic = static_cast<long>(stats.vertex_count) -
                               static_cast<long>(stats.edge_count) +
                               static_cast<long>(stats.triangle_count);
  return stats;
}

void write_obj(const TriangleMesh &mesh, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError(path, "cannot open for writing");
  for (const auto &v : mesh.vertices)
    out << "v " << format_real(v[0], 9) << ' ' << format_real(v[1], 9) << ' '
        << format_real(v[2], 9) << '\n';
  for (const auto &t : mesh.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out)
    throw IoError(path, "write failed");
}

} // namespace equips
