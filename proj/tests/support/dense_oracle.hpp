#pragma once

// Dense direct solve of the voxel diffusion system, assembled independently
// of the library operator.

#include "equips/grid.hpp"
#include "equips/transport.hpp"

#include <Eigen/Dense>

namespace equips::oracle {

struct DenseSolution {
  Eigen::VectorXd potential;
  double flux_in;
};

/// Assembles the finite-volume system row by row (harmonic face
/// conductivities, half-cell Dirichlet faces) and solves it densely.
inline DenseSolution dense_diffusion(const PhaseGrid &seg, const PhaseProperties &props) {
  const auto &s = seg.shape();
  const int n = static_cast<int>(s.voxel_count());
  const double h[3] = {s.spacing().dx, s.spacing().dy, s.spacing().dz};
  const long ext[3] = {static_cast<long>(s.nx()), static_cast<long>(s.ny()),
                       static_cast<long>(s.nz())};
  auto k_of = [&](std::size_t v, int d) {
    const Conductivity &k = seg[v] ? props.k_inside : props.k_outside;
    return d == 0 ? k.kx : d == 1 ? k.ky : k.kz;
  };
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  const int axis = static_cast<int>(props.axis);
  for (long k = 0; k < ext[2]; ++k)
    for (long j = 0; j < ext[1]; ++j)
      for (long i = 0; i < ext[0]; ++i) {
        const long c[3] = {i, j, k};
        const auto v = s.index(i, j, k);
        for (int d = 0; d < 3; ++d) {
          const double area = h[(d + 1) % 3] * h[(d + 2) % 3];
          for (int side : {-1, 1}) {
            long nc[3] = {c[0], c[1], c[2]};
            nc[d] += side;
            if (nc[d] >= 0 && nc[d] < ext[d]) {
              const auto w = s.index(nc[0], nc[1], nc[2]);
              // Series resistance of the two half cells.
              const double r = 0.5 * h[d] / k_of(v, d) + 0.5 * h[d] / k_of(w, d);
              const double t = area / r;
              A(v, v) += t;
              A(v, w) -= t;
            } else if (d == axis) {
              const double t = area / (0.5 * h[d] / k_of(v, d));
              A(v, v) += t;
              if (side < 0)
                b(v) += t * props.potential_drop;
            }
          }
        }
      }
  DenseSolution out;
  out.potential = A.ldlt().solve(b);
  out.flux_in = 0.0;
  for (long k = 0; k < ext[2]; ++k)
    for (long j = 0; j < ext[1]; ++j)
      for (long i = 0; i < ext[0]; ++i) {
        const long c[3] = {i, j, k};
        if (c[axis] != 0)
          continue;
        const auto v = s.index(i, j, k);
        const double area = h[(axis + 1) % 3] * h[(axis + 2) % 3];
        out.flux_in += area / (0.5 * h[axis] / k_of(v, axis)) *
                       (props.potential_drop - out.potential(v));
      }
  return out;
}

} // namespace equips::oracle
