#pragma once

#include "equips/config.hpp"
#include "equips/distribution.hpp"
#include "equips/grid.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace equips {

/// Probability map of the configured input: the mean of the phantom or
/// NPY stack samples (one-vs-rest for `class_label`), or the stored map.
ProbabilityMap load_probability_map(const RunConfig &config);

/// Physics outcome on one percentile segmentation.
struct PercentileRecord {
  double percentile = 0.0;
  double threshold = 0.0;
  /// The quantity entered into the distribution: volume fraction, k_eff,
  /// tortuosity or the external table value.
  double value = 0.0;
  double volume_fraction = 0.0;
  std::optional<double> k_eff;
  std::optional<double> tortuosity;
  std::optional<bool> percolating;
  std::size_t iterations = 0;
  double seconds = 0.0;
};

/// Physics of `seg` (a percentile segmentation tagged with its percentile).
PercentileRecord evaluate_physics(const PhaseGrid &seg, const PhysicsConfig &physics,
                                  const SolverOptions &solver);

/// Threshold + physics for each percentile, using up to `threads` workers.
/// Results are returned in input order. If any task fails, the successful
/// records are still returned through `completed` before the first failure
/// (in percentile order) is rethrown with its stage and percentile.
std::vector<PercentileRecord> run_percentiles(const ProbabilityMap &pmap,
                                              const std::vector<double> &percentiles,
                                              const PhysicsConfig &physics,
                                              const SolverOptions &solver, std::size_t threads,
                                              std::vector<PercentileRecord> *completed = nullptr);

struct OutputFile {
  std::string name; ///< relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct SweepResult {
  std::vector<PercentileRecord> records; ///< sorted by percentile
  std::optional<PercentileSampleSet> samples;
  std::optional<CharacteristicDistribution> fit;
  double goodness_of_fit = 0.0;
  /// Fit on the initial percentiles, scored against every executed sample.
  std::optional<CharacteristicDistribution> initial_fit;
  double initial_goodness_of_fit = 0.0;
  /// Percentiles added by refinement, in execution order.
  std::vector<double> refined;
  std::optional<MonotonicityReport> monotonicity;
  std::optional<EnvelopeReport> envelope;
  std::vector<OutputFile> files;
  bool partial = false;
};

/// Progress sink; receives one line per stage.
using Logger = std::function<void(const std::string &)>;

/// Full workflow: probability map, per-percentile physics, fit, refinement,
/// diagnostics and the report bundle in `config.outputs.directory`
/// (distribution.csv, report.json, umap.npy, mesh_q<q>.stl, manifest.json).
/// A failing stage leaves the completed rows and a manifest flagged
/// `partial`, then rethrows with the stage and percentile in the message.
SweepResult run_sweep(const RunConfig &config, const Logger &log = {});

/// File-name fragment for a percentile, e.g. 15.9 -> "15.9".
std::string percentile_tag(double percentile);

/// Hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string &path);

/// Interpolates a `percentile,quantity` table linearly; throws
/// ValidationError outside the table's percentile range.
double interpolate_quantity(const PercentileSampleSet &table, double percentile);

} // namespace equips
