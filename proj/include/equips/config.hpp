#pragma once

#include "equips/distribution.hpp"
#include "equips/grid.hpp"
#include "equips/phantom.hpp"
#include "equips/transport.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace equips {

/// Synthetic noisy segmentations of a phantom; the run seed drives the noise.
struct PhantomInput {
  PhantomSpec spec{SphereGeometry{}, 1.0, 0.25, 0};
  std::array<std::size_t, 3> extents{32, 32, 32};
  std::size_t samples = 48;
};

/// One NPY volume per Monte Carlo sample: {0, 1} masks or class label volumes.
struct StackInput {
  std::vector<std::string> paths;
};

struct ProbabilityMapInput {
  std::string path;
};

using InputSource = std::variant<PhantomInput, StackInput, ProbabilityMapInput>;

enum class PhysicsKind { volume_fraction, conductivity, tortuosity, external };

PhysicsKind parse_physics_kind(const std::string &name);
const char *physics_kind_name(PhysicsKind kind);

struct PhysicsConfig {
  PhysicsKind kind = PhysicsKind::volume_fraction;
  /// Conductivities, axis and drop for `conductivity`; only the axis is used
  /// by `tortuosity`.
  PhaseProperties props;
  /// `percentile,quantity` table for `external`, interpolated linearly.
  std::string external_csv;
};

struct FitConfig {
  Family family = Family::normal;
  double tolerance = 0.05;
  std::size_t refine_budget = 0;
};

struct OutputConfig {
  std::string directory = "equips-out";
  bool stl = false;
  bool uncertainty_map = true;
};

struct RunConfig {
  InputSource input = PhantomInput{};
  Spacing spacing;
  int class_label = 1;
  std::vector<double> percentiles{15.9, 50.0, 84.1};
  PhysicsConfig physics;
  SolverOptions solver;
  FitConfig fit;
  OutputConfig outputs;
  /// `percentile,time,value` table checked by the envelope diagnostic.
  std::optional<std::string> series_csv;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  /// Throws ValidationError on out-of-range or duplicate percentiles, a
  /// missing standard percentile, an empty stack or bad physics settings.
  void validate() const;
};

/// Parses a JSON run configuration. Relative paths are resolved against
/// `base_directory`. Unknown keys are rejected.
RunConfig parse_run_config(const std::string &json_text, const std::string &base_directory = ".",
                           const std::string &source = "<config>");

/// Reads and parses a configuration file; relative paths resolve against
/// the file's directory.
RunConfig load_run_config(const std::string &path);

/// Canonical JSON of the effective configuration (sorted keys, compact).
std::string canonical_config(const RunConfig &config);

/// Parses "15.9,50,84.1".
std::vector<double> parse_percentile_list(const std::string &text);

} // namespace equips
