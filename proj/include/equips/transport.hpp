#pragma once

#include "equips/grid.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace equips {

/// Diagonal conductivity tensor.
struct Conductivity {
  double kx = 1.0;
  double ky = 1.0;
  double kz = 1.0;

  static Conductivity isotropic(double k) { return {k, k, k}; }
  double along(Axis axis) const;
};

/// Conductivity floor used for the non-transporting phase.
inline constexpr double kBlockingConductivity = 1e-6;

/// Phase conductivities and the applied potential difference. The potential
/// is `potential_drop` on the face at index 0 along `axis` and 0 on the
/// opposite face; all other faces are insulated.
struct PhaseProperties {
  Conductivity k_inside = Conductivity::isotropic(1.0);
  Conductivity k_outside = Conductivity::isotropic(kBlockingConductivity);
  Axis axis = Axis::z;
  double potential_drop = 1.0;

  /// Throws ValidationError for non-positive or non-finite conductivities
  /// or a zero potential drop.
  void validate() const;
};

struct SolverOptions {
  double tolerance = 1e-8;
  /// 0 selects 200 * (nx + ny + nz).
  std::size_t max_iterations = 0;
};

struct FieldSolution {
  ScalarGrid potential;
  double flux_in = 0.0;  ///< through the face held at potential_drop
  double flux_out = 0.0; ///< through the face held at 0
  std::size_t iterations = 0;
  double final_relative_residual = 0.0;
  std::vector<double> residual_history;
};

/// Steady diffusion on the voxel grid: 7-point finite volumes with
/// harmonic-mean face conductivities, solved by Jacobi-preconditioned
/// conjugate gradients to ||b - Ax|| <= tolerance * ||b||.
///
/// Throws SolverError (with the residual history) if the tolerance is not
/// reached within the iteration limit.
FieldSolution solve_diffusion(const PhaseGrid &seg, const PhaseProperties &props,
                              const SolverOptions &options = {});

/// (flux_in / cross-section) / (potential_drop / length along the axis).
double effective_conductivity(const FieldSolution &solution, const PhaseProperties &props,
                              const GridShape &shape);

struct TransportResult {
  double k_eff = 0.0;
  /// Volume fraction of the transporting phase.
  double porosity = 0.0;
  std::optional<double> tortuosity;
  std::optional<double> percentile;
  /// Transporting phase connects the two Dirichlet faces.
  bool percolating = false;
  std::size_t iterations = 0;
};

/// Effective conductivity of `seg` under `props`; porosity is the inside
/// volume fraction.
TransportResult effective_transport(const PhaseGrid &seg, const PhaseProperties &props,
                                    const SolverOptions &options = {});

/// Pore-space tortuosity. The pore space (outside of `seg`) conducts with
/// unit conductivity and the solid with kBlockingConductivity; tortuosity is
/// porosity / k_eff. Non-percolating pore space is solved, not rejected, and
/// reported through `percolating`.
TransportResult tortuosity(const PhaseGrid &seg, Axis axis, const SolverOptions &options = {});

struct WienerBounds {
  double lower; ///< series (harmonic) mixture
  double upper; ///< parallel (arithmetic) mixture
};

WienerBounds wiener_bounds(const PhaseProperties &props, double inside_fraction);

} // namespace equips
