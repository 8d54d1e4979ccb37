#include "equips/transport.hpp"

#include "equips/connectivity.hpp"
#include "equips/error.hpp"
#include "equips/voxel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace equips {

double Conductivity::along(Axis axis) const {
  switch (axis) {
  case Axis::x:
    return kx;
  case Axis::y:
    return ky;
  case Axis::z:
    return kz;
  }
  return kx;
}

void PhaseProperties::validate() const {
  for (double k : {k_inside.kx, k_inside.ky, k_inside.kz, k_outside.kx, k_outside.ky,
                   k_outside.kz}) {
    if (!std::isfinite(k) || k <= 0.0)
      throw ValidationError("conductivities must be positive and finite");
  }
  if (!std::isfinite(potential_drop) || potential_drop == 0.0)
    throw ValidationError("potential drop must be finite and non-zero");
}

namespace {

// Symmetric 7-point operator. off[d][v] couples v with its +d neighbour.
struct DiffusionOperator {
  GridShape shape;
  std::vector<double> diag;
  std::array<std::vector<double>, 3> off;
  std::array<std::size_t, 3> stride;
  std::vector<double> inlet;  // boundary transmissibility on the drop face, 0 elsewhere
  std::vector<double> outlet; // boundary transmissibility on the grounded face

  void apply(const std::vector<double> &x, std::vector<double> &y) const {
    const std::size_t n = diag.size();
    for (std::size_t v = 0; v < n; ++v)
      y[v] = diag[v] * x[v];
    for (int d = 0; d < 3; ++d) {
      const auto &t = off[d];
      const std::size_t s = stride[d];
      for (std::size_t v = 0; v + s < n; ++v) {
        if (t[v] == 0.0)
          continue;
        y[v] -= t[v] * x[v + s];
        y[v + s] -= t[v] * x[v];
      }
    }
  }
};

DiffusionOperator assemble(const PhaseGrid &seg, const PhaseProperties &props) {
  const GridShape &shape = seg.shape();
  const std::size_t n = shape.voxel_count();
  const Spacing &h = shape.spacing();
  const std::array<double, 3> hs{h.dx, h.dy, h.dz};
  const std::array<double, 3> area{h.dy * h.dz, h.dx * h.dz, h.dx * h.dy};
  const std::array<Axis, 3> axes{Axis::x, Axis::y, Axis::z};

  DiffusionOperator op{shape, std::vector<double>(n, 0.0), {}, {1, shape.nx(), shape.nx() * shape.ny()},
                       std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (int d = 0; d < 3; ++d) {
    op.off[d].assign(n, 0.0);
    const double k_in = props.k_inside.along(axes[d]);
    const double k_out = props.k_outside.along(axes[d]);
    const double factor = area[d] / hs[d];
    const std::size_t last = shape.extents()[d] - 1;
    for (std::size_t v = 0; v < n; ++v) {
      if (shape.coords(v)[d] == last)
        continue;
      const double ka = seg[v] ? k_in : k_out;
      const double kb = seg[v + op.stride[d]] ? k_in : k_out;
      const double t = factor * 2.0 * ka * kb / (ka + kb);
      op.off[d][v] = t;
      op.diag[v] += t;
      op.diag[v + op.stride[d]] += t;
    }
  }

  const int a = static_cast<int>(props.axis);
  const double k_in = props.k_inside.along(props.axis);
  const double k_out = props.k_outside.along(props.axis);
  const double boundary_factor = 2.0 * area[a] / hs[a];
  const std::size_t last = shape.extents()[a] - 1;
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t c = shape.coords(v)[a];
    const double t = boundary_factor * (seg[v] ? k_in : k_out);
    if (c == 0) {
      op.inlet[v] = t;
      op.diag[v] += t;
    }
    if (c == last) {
      op.outlet[v] = t;
      op.diag[v] += t;
    }
  }
  return op;
}

double dot(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

std::string format_residual(double r) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << r;
  return os.str();
}

} // namespace

FieldSolution solve_diffusion(const PhaseGrid &seg, const PhaseProperties &props,
                              const SolverOptions &options) {
  props.validate();
  if (!(options.tolerance > 0.0))
    throw ValidationError("solver tolerance must be > 0");
  const GridShape &shape = seg.shape();
  const std::size_t n = shape.voxel_count();
  const std::size_t max_iter =
      options.max_iterations > 0 ? options.max_iterations : 200 * (shape.nx() + shape.ny() + shape.nz());

  const DiffusionOperator op = assemble(seg, props);
  const double drop = props.potential_drop;
  std::vector<double> b(n);
  for (std::size_t v = 0; v < n; ++v)
    b[v] = op.inlet[v] * drop;
  const double b_norm = std::sqrt(dot(b, b));

  // Start from the homogeneous-medium solution: linear along the axis.
  const int a = static_cast<int>(props.axis);
  const double na = static_cast<double>(shape.extents()[a]);
  std::vector<double> x(n);
  for (std::size_t v = 0; v < n; ++v)
    x[v] = drop * (1.0 - (static_cast<double>(shape.coords(v)[a]) + 0.5) / na);

  std::vector<double> r(n), z(n), p(n), ap(n);
  auto true_residual = [&] {
    op.apply(x, ap);
    for (std::size_t v = 0; v < n; ++v)
      r[v] = b[v] - ap[v];
    return std::sqrt(dot(r, r)) / b_norm;
  };

  // Net boundary flux equals the residual sum, so a small residual relative
  // to b does not bound the imbalance when the transmitted flux is tiny.
  // Below the rounding level of the summed terms the sum carries no signal.
  auto balanced = [&] {
    double inflow = 0.0, imbalance = 0.0, magnitude = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      inflow += op.inlet[v] * (drop - x[v]);
      imbalance += r[v];
      magnitude += std::abs(b[v]) + 2.0 * op.diag[v] * std::abs(x[v]);
    }
    const double floor = std::numeric_limits<double>::epsilon() * magnitude;
    return std::abs(imbalance) <= std::max(options.tolerance * std::abs(inflow), floor);
  };
  auto converged = [&](double rel) { return rel <= options.tolerance && balanced(); };

  FieldSolution sol{ScalarGrid(shape), 0.0, 0.0, 0, 0.0, {}};
  double rel = true_residual();
  sol.residual_history.push_back(rel);

  std::size_t it = 0;
  while (!converged(rel)) {
    // (Re)start the Krylov sequence from the current residual.
    for (std::size_t v = 0; v < n; ++v)
      p[v] = z[v] = r[v] / op.diag[v];
    double rz = dot(r, z);
    bool breakdown = false;
    while (it < max_iter) {
      op.apply(p, ap);
      const double p_ap = dot(p, ap);
      if (!(p_ap > 0.0)) {
        breakdown = true;
        break;
      }
      const double alpha = rz / p_ap;
      for (std::size_t v = 0; v < n; ++v) {
        x[v] += alpha * p[v];
        r[v] -= alpha * ap[v];
      }
      ++it;
      rel = std::sqrt(dot(r, r)) / b_norm;
      sol.residual_history.push_back(rel);
      if (converged(rel))
        break;
      for (std::size_t v = 0; v < n; ++v)
        z[v] = r[v] / op.diag[v];
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t v = 0; v < n; ++v)
        p[v] = z[v] + beta * p[v];
    }
    // Guard against drift between the recurrence and the true residual.
    rel = true_residual();
    if (converged(rel))
      break;
    if (it >= max_iter || breakdown)
      throw SolverError("conjugate gradients did not reach relative residual and flux balance " +
                            format_residual(options.tolerance) + " in " +
                            std::to_string(max_iter) + " iterations (last " +
                            format_residual(rel) + ")",
                        std::move(sol.residual_history));
  }

  sol.iterations = it;
  sol.final_relative_residual = rel;
  for (std::size_t v = 0; v < n; ++v) {
    sol.flux_in += op.inlet[v] * (drop - x[v]);
    sol.flux_out += op.outlet[v] * x[v];
  }
  sol.potential = ScalarGrid(shape, std::move(x));
  return sol;
}

double effective_conductivity(const FieldSolution &solution, const PhaseProperties &props,
                              const GridShape &shape) {
  props.validate();
  const Spacing &h = shape.spacing();
  const std::array<double, 3> len{static_cast<double>(shape.nx()) * h.dx,
                                  static_cast<double>(shape.ny()) * h.dy,
                                  static_cast<double>(shape.nz()) * h.dz};
  const int a = static_cast<int>(props.axis);
  const double length = len[a];
  const double section = len[0] * len[1] * len[2] / length;
  return (solution.flux_in / section) / (props.potential_drop / length);
}

TransportResult effective_transport(const PhaseGrid &seg, const PhaseProperties &props,
                                    const SolverOptions &options) {
  const FieldSolution sol = solve_diffusion(seg, props, options);
  TransportResult out;
  out.k_eff = effective_conductivity(sol, props, seg.shape());
  out.porosity = volume_fraction(seg);
  out.percentile = seg.percentile();
  out.percolating = percolation_check(seg, props.axis);
  out.iterations = sol.iterations;
  return out;
}

TransportResult tortuosity(const PhaseGrid &seg, Axis axis, const SolverOptions &options) {
  PhaseProperties props;
  props.k_inside = Conductivity::isotropic(1.0);
  props.k_outside = Conductivity::isotropic(kBlockingConductivity);
  props.axis = axis;
  TransportResult out = effective_transport(seg.complement(), props, options);
  out.percentile = seg.percentile();
  if (out.porosity > 0.0)
    out.tortuosity = out.porosity / out.k_eff;
  return out;
}

WienerBounds wiener_bounds(const PhaseProperties &props, double inside_fraction) {
  props.validate();
  if (!(inside_fraction >= 0.0 && inside_fraction <= 1.0))
    throw ValidationError("volume fraction must lie in [0, 1]");
  const double k_in = props.k_inside.along(props.axis);
  const double k_out = props.k_outside.along(props.axis);
  const double f = inside_fraction;
  return {1.0 / (f / k_in + (1.0 - f) / k_out), f * k_in + (1.0 - f) * k_out};
}

} // namespace equips
