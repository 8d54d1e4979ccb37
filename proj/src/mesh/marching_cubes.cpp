#include "equips/mesh.hpp"

#include "equips/error.hpp"

#include <cfloat>
#include <cmath>
#include <cstdint>
#include <sstream>

namespace equips {

namespace {

#include "mc_tables.inc"

// Corner c of a cell sits at offset (kCorner[c][0], kCorner[c][1], kCorner[c][2]).
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
// Cell edge e joins corners kEdge[e][0] and kEdge[e][1].
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

constexpr double kTieNudge = 1e-12;
constexpr double kAmbiguity = FLT_EPSILON;

class Extractor {
public:
  Extractor(const ScalarGrid &field, double level)
      : field_(field), shape_(field.shape()), level_(level),
        edge_vertex_(3 * shape_.voxel_count(), -1) {}

  TriangleMesh run() {
    const std::size_t nx = shape_.nx(), ny = shape_.ny(), nz = shape_.nz();
    for (std::size_t k = 0; k + 1 < nz; ++k)
      for (std::size_t j = 0; j + 1 < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i)
          process_cell(i, j, k);
    return std::move(mesh_);
  }

private:
  double value(std::size_t i, std::size_t j, std::size_t k) const {
    const double v = field_.at(i, j, k) - level_;
    return v == 0.0 ? kTieNudge : v;
  }

  Vec3 position(std::size_t i, std::size_t j, std::size_t k) const {
    const Spacing &h = shape_.spacing();
    return {static_cast<double>(i) * h.dx, static_cast<double>(j) * h.dy,
            static_cast<double>(k) * h.dz};
  }

  // Vertex on cell edge e, created once per grid edge.
  std::uint32_t edge_vertex(int e) {
    const int a = kEdge[e][0], b = kEdge[e][1];
    std::size_t pa[3], pb[3];
    for (int d = 0; d < 3; ++d) {
      pa[d] = cell_[d] + kCorner[a][d];
      pb[d] = cell_[d] + kCorner[b][d];
    }
    int dir = 0;
    while (pa[dir] == pb[dir])
      ++dir;
    const std::size_t *lo = pa[dir] < pb[dir] ? pa : pb;
    const std::size_t key = 3 * shape_.index(lo[0], lo[1], lo[2]) + dir;
    if (edge_vertex_[key] >= 0)
      return static_cast<std::uint32_t>(edge_vertex_[key]);

    const double va = cube_[a], vb = cube_[b];
    const double t = va / (va - vb);
    const Vec3 xa = position(pa[0], pa[1], pa[2]);
    const Vec3 xb = position(pb[0], pb[1], pb[2]);
    mesh_.vertices.push_back(
        {xa[0] + t * (xb[0] - xa[0]), xa[1] + t * (xb[1] - xa[1]), xa[2] + t * (xb[2] - xa[2])});
    edge_vertex_[key] = static_cast<std::int64_t>(mesh_.vertices.size() - 1);
    return static_cast<std::uint32_t>(edge_vertex_[key]);
  }

  // Extra vertex inside the cell: the mean of the cell's edge crossings.
  std::uint32_t add_center_vertex() {
    Vec3 c{0.0, 0.0, 0.0};
    int count = 0;
    for (int e = 0; e < 12; ++e) {
      if ((cube_[kEdge[e][0]] > 0) == (cube_[kEdge[e][1]] > 0))
        continue;
      const Vec3 &v = mesh_.vertices[edge_vertex(e)];
      for (int d = 0; d < 3; ++d)
        c[d] += v[d];
      ++count;
    }
    for (int d = 0; d < 3; ++d)
      c[d] /= count;
    mesh_.vertices.push_back(c);
    return static_cast<std::uint32_t>(mesh_.vertices.size() - 1);
  }

  void add_triangles(const std::int8_t *tiling, int count, std::uint32_t center = 0) {
    for (int t = 0; t < count; ++t) {
      std::array<std::uint32_t, 3> tri;
      for (int c = 0; c < 3; ++c) {
        const int e = tiling[3 * t + c];
        tri[c] = e == 12 ? center : edge_vertex(e);
      }
      // Table winding faces the positive side; flip so normals point outward.
      mesh_.triangles.push_back({tri[0], tri[2], tri[1]});
    }
  }

  // Asymptotic decider on a cell face; `face` carries the sign convention of
  // the tables.
  bool test_face(int face) const {
    double A, B, C, D;
    switch (face) {
    case -1:
    case 1:
      A = cube_[0], B = cube_[4], C = cube_[5], D = cube_[1];
      break;
    case -2:
    case 2:
      A = cube_[1], B = cube_[5], C = cube_[6], D = cube_[2];
      break;
    case -3:
    case 3:
      A = cube_[2], B = cube_[6], C = cube_[7], D = cube_[3];
      break;
    case -4:
    case 4:
      A = cube_[3], B = cube_[7], C = cube_[4], D = cube_[0];
      break;
    case -5:
    case 5:
      A = cube_[0], B = cube_[3], C = cube_[2], D = cube_[1];
      break;
    case -6:
    case 6:
      A = cube_[4], B = cube_[7], C = cube_[6], D = cube_[5];
      break;
    default:
      throw Error("marching cubes: invalid face code " + std::to_string(face));
    }
    if (std::abs(A * C - B * D) < kAmbiguity)
      return face >= 0;
    return face * A * (A * C - B * D) >= 0;
  }

  // Interior ambiguity test: does the cell interior connect the two
  // separated components?
  bool test_interior(int s) const {
    double t, At = 0, Bt = 0, Ct = 0, Dt = 0;
    const double *c = cube_;

    switch (case_) {
    case 4:
    case 10: {
      const double a = (c[4] - c[0]) * (c[6] - c[2]) - (c[7] - c[3]) * (c[5] - c[1]);
      const double b = c[2] * (c[4] - c[0]) + c[0] * (c[6] - c[2]) - c[1] * (c[7] - c[3]) -
                       c[3] * (c[5] - c[1]);
      t = -b / (2 * a);
      if (t < 0 || t > 1)
        return s > 0;
      At = c[0] + (c[4] - c[0]) * t;
      Bt = c[3] + (c[7] - c[3]) * t;
      Ct = c[2] + (c[6] - c[2]) * t;
      Dt = c[1] + (c[5] - c[1]) * t;
      break;
    }
    case 6:
    case 7:
    case 12:
    case 13: {
      int edge = -1;
      switch (case_) {
      case 6:
        edge = test6[config_][2];
        break;
      case 7:
        edge = test7[config_][4];
        break;
      case 12:
        edge = test12[config_][3];
        break;
      case 13:
        edge = tiling13_5_1[config_][subconfig_][0];
        break;
      }
      // Parametrise along the reference edge and bilinearly interpolate the
      // section of the cell through that point.
      auto section = [&](int p0, int p1, int b0, int b1, int c0, int c1, int d0, int d1) {
        t = c[p0] / (c[p0] - c[p1]);
        At = 0;
        Bt = c[b0] + (c[b1] - c[b0]) * t;
        Ct = c[c0] + (c[c1] - c[c0]) * t;
        Dt = c[d0] + (c[d1] - c[d0]) * t;
      };
      switch (edge) {
      case 0:
        section(0, 1, 3, 2, 7, 6, 4, 5);
        break;
      case 1:
        section(1, 2, 0, 3, 4, 7, 5, 6);
        break;
      case 2:
        section(2, 3, 1, 0, 5, 4, 6, 7);
        break;
      case 3:
        section(3, 0, 2, 1, 6, 5, 7, 4);
        break;
      case 4:
        section(4, 5, 7, 6, 3, 2, 0, 1);
        break;
      case 5:
        section(5, 6, 4, 7, 0, 3, 1, 2);
        break;
      case 6:
        section(6, 7, 5, 4, 1, 0, 2, 3);
        break;
      case 7:
        section(7, 4, 6, 5, 2, 1, 3, 0);
        break;
      case 8:
        section(0, 4, 3, 7, 2, 6, 1, 5);
        break;
      case 9:
        section(1, 5, 0, 4, 3, 7, 2, 6);
        break;
      case 10:
        section(2, 6, 1, 5, 0, 4, 3, 7);
        break;
      case 11:
        section(3, 7, 2, 6, 1, 5, 0, 4);
        break;
      default:
        throw Error("marching cubes: invalid reference edge " + std::to_string(edge));
      }
      break;
    }
    default:
      throw Error("marching cubes: invalid ambiguous case " + std::to_string(case_));
    }

    int test = 0;
    if (At >= 0)
      test += 1;
    if (Bt >= 0)
      test += 2;
    if (Ct >= 0)
      test += 4;
    if (Dt >= 0)
      test += 8;
    switch (test) {
    case 0:
    case 1:
    case 2:
    case 3:
    case 4:
    case 6:
    case 8:
    case 9:
    case 12:
      return s > 0;
    case 5:
      if (At * Ct - Bt * Dt < kAmbiguity)
        return s > 0;
      break;
    case 10:
      if (At * Ct - Bt * Dt >= kAmbiguity)
        return s > 0;
      break;
    case 7:
    case 11:
    case 13:
    case 14:
    case 15:
      return s < 0;
    }
    return s < 0;
  }

  void process_cell(std::size_t i, std::size_t j, std::size_t k) {
    cell_[0] = i, cell_[1] = j, cell_[2] = k;
    int entry = 0;
    for (int p = 0; p < 8; ++p) {
      cube_[p] = value(i + kCorner[p][0], j + kCorner[p][1], k + kCorner[p][2]);
      if (cube_[p] > 0)
        entry |= 1 << p;
    }
    case_ = cases[entry][0];
    config_ = cases[entry][1];
    subconfig_ = 0;

    switch (case_) {
    case 0:
      break;
    case 1:
      add_triangles(tiling1[config_], 1);
      break;
    case 2:
      add_triangles(tiling2[config_], 2);
      break;
    case 3:
      if (test_face(test3[config_]))
        add_triangles(tiling3_2[config_], 4);
      else
        add_triangles(tiling3_1[config_], 2);
      break;
    case 4:
      if (test_interior(test4[config_]))
        add_triangles(tiling4_1[config_], 2);
      else
        add_triangles(tiling4_2[config_], 6);
      break;
    case 5:
      add_triangles(tiling5[config_], 3);
      break;
    case 6:
      if (test_face(test6[config_][0]))
        add_triangles(tiling6_2[config_], 5);
      else if (test_interior(test6[config_][1]))
        add_triangles(tiling6_1_1[config_], 3);
      else
        add_triangles(tiling6_1_2[config_], 9, add_center_vertex());
      break;
    case 7:
      if (test_face(test7[config_][0]))
        subconfig_ += 1;
      if (test_face(test7[config_][1]))
        subconfig_ += 2;
      if (test_face(test7[config_][2]))
        subconfig_ += 4;
      switch (subconfig_) {
      case 0:
        add_triangles(tiling7_1[config_], 3);
        break;
      case 1:
        add_triangles(tiling7_2[config_][0], 5);
        break;
      case 2:
        add_triangles(tiling7_2[config_][1], 5);
        break;
      case 3:
        add_triangles(tiling7_3[config_][0], 9, add_center_vertex());
        break;
      case 4:
        add_triangles(tiling7_2[config_][2], 5);
        break;
      case 5:
        add_triangles(tiling7_3[config_][1], 9, add_center_vertex());
        break;
      case 6:
        add_triangles(tiling7_3[config_][2], 9, add_center_vertex());
        break;
      case 7:
        if (test_interior(test7[config_][3]))
          add_triangles(tiling7_4_2[config_], 9);
        else
          add_triangles(tiling7_4_1[config_], 5);
        break;
      }
      break;
    case 8:
      add_triangles(tiling8[config_], 2);
      break;
    case 9:
      add_triangles(tiling9[config_], 4);
      break;
    case 10:
      if (test_face(test10[config_][0])) {
        if (test_face(test10[config_][1]))
          add_triangles(tiling10_1_1_[config_], 4);
        else
          add_triangles(tiling10_2[config_], 8, add_center_vertex());
      } else {
        if (test_face(test10[config_][1]))
          add_triangles(tiling10_2_[config_], 8, add_center_vertex());
        else if (test_interior(test10[config_][2]))
          add_triangles(tiling10_1_1[config_], 4);
        else
          add_triangles(tiling10_1_2[config_], 8);
      }
      break;
    case 11:
      add_triangles(tiling11[config_], 4);
      break;
    case 12:
      if (test_face(test12[config_][0])) {
        if (test_face(test12[config_][1]))
          add_triangles(tiling12_1_1_[config_], 4);
        else
          add_triangles(tiling12_2[config_], 8, add_center_vertex());
      } else {
        if (test_face(test12[config_][1]))
          add_triangles(tiling12_2_[config_], 8, add_center_vertex());
        else if (test_interior(test12[config_][2]))
          add_triangles(tiling12_1_1[config_], 4);
        else
          add_triangles(tiling12_1_2[config_], 8);
      }
      break;
    case 13:
      process_case13();
      break;
    case 14:
      add_triangles(tiling14[config_], 4);
      break;
    default:
      throw Error("marching cubes: invalid case " + std::to_string(case_));
    }
  }

  void process_case13() {
    for (int f = 0; f < 6; ++f)
      if (test_face(test13[config_][f]))
        subconfig_ += 1 << f;
    const int sub = subconfig13[subconfig_];
    if (sub == 0) {
      add_triangles(tiling13_1[config_], 4);
    } else if (sub >= 1 && sub <= 6) {
      add_triangles(tiling13_2[config_][sub - 1], 6);
    } else if (sub >= 7 && sub <= 18) {
      add_triangles(tiling13_3[config_][sub - 7], 10, add_center_vertex());
    } else if (sub >= 19 && sub <= 22) {
      add_triangles(tiling13_4[config_][sub - 19], 12, add_center_vertex());
    } else if (sub >= 23 && sub <= 26) {
      subconfig_ = sub - 23;
      if (test_interior(test13[config_][6]))
        add_triangles(tiling13_5_1[config_][sub - 23], 6);
      else
        add_triangles(tiling13_5_2[config_][sub - 23], 10);
    } else if (sub >= 27 && sub <= 38) {
      add_triangles(tiling13_3_[config_][sub - 27], 10, add_center_vertex());
    } else if (sub >= 39 && sub <= 44) {
      add_triangles(tiling13_2_[config_][sub - 39], 6);
    } else if (sub == 45) {
      add_triangles(tiling13_1_[config_], 4);
    } else {
      throw Error("marching cubes: impossible case 13 configuration");
    }
  }

  const ScalarGrid &field_;
  GridShape shape_;
  double level_;
  std::vector<std::int64_t> edge_vertex_;
  TriangleMesh mesh_;

  std::size_t cell_[3] = {0, 0, 0};
  double cube_[8] = {};
  int case_ = 0;
  int config_ = 0;
  int subconfig_ = 0;
};

void check_extents(const GridShape &shape) {
  if (shape.nx() < 2 || shape.ny() < 2 || shape.nz() < 2)
    throw ValidationError("marching cubes needs at least 2 samples per axis, got " +
                          shape.to_string());
}

} // namespace

TriangleMesh marching_cubes(const ScalarGrid &field, double level) {
  if (!std::isfinite(level))
    throw ValidationError("contour level must be finite");
  check_extents(field.shape());
  return Extractor(field, level).run();
}

TriangleMesh marching_cubes(const ProbabilityMap &pmap, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    std::ostringstream os;
    os << "contour level " << level << " must lie strictly between 0 and 1";
    throw ValidationError(os.str());
  }
  check_extents(pmap.shape());
  return Extractor(pmap.as_scalar_grid(), level).run();
}

} // namespace equips
