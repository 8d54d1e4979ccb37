// equips command-line front end: one subcommand per workflow step.

#include "equips/config.hpp"
#include "equips/csv.hpp"
#include "equips/error.hpp"
#include "equips/mesh.hpp"
#include "equips/npy.hpp"
#include "equips/pipeline.hpp"
#include "equips/stl.hpp"
#include "equips/text.hpp"
#include "equips/voxel.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace equips;

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kSolver = 3, kIo = 4 };

/// Flags shared by every subcommand; set flags override the config file.
struct CommonFlags {
  std::string config;
  std::string percentiles;
  std::string out;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App *cmd, CommonFlags &f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--percentiles", f.percentiles, "comma-separated percentiles, e.g. 15.9,50,84.1");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker threads (default: config, then $EQUIPS_THREADS, then 1)");
  cmd->add_option("--seed", f.seed, "phantom noise seed");
}

std::optional<std::size_t> env_threads() {
  const char *v = std::getenv("EQUIPS_THREADS");
  if (!v || !*v)
    return std::nullopt;
  const auto n = parse_real(v);
  if (!n || *n < 1 || *n != static_cast<double>(static_cast<std::size_t>(*n)))
    throw ValidationError(std::string("EQUIPS_THREADS must be a positive integer, got '") + v + "'");
  return static_cast<std::size_t>(*n);
}

/// Defaults < EQUIPS_THREADS < config file < flags.
RunConfig effective_config(const CommonFlags &f, bool config_sets_threads = false) {
  RunConfig c;
  bool threads_from_config = false;
  if (!f.config.empty()) {
    c = load_run_config(f.config);
    threads_from_config = config_sets_threads;
  }
  if (!threads_from_config)
    if (auto t = env_threads())
      c.threads = *t;
  if (!f.percentiles.empty())
    c.percentiles = parse_percentile_list(f.percentiles);
  if (!f.out.empty())
    c.outputs.directory = f.out;
  if (f.threads)
    c.threads = *f.threads;
  if (f.seed)
    c.seed = *f.seed;
  c.validate();
  return c;
}

bool config_has_threads(const std::string &path) {
  if (path.empty())
    return false;
  // The parsed config cannot tell a default from an explicit value.
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text.find("\"threads\"") != std::string::npos;
}

std::string out_path(const RunConfig &c, const std::string &name) {
  std::error_code ec;
  fs::create_directories(c.outputs.directory, ec);
  if (ec)
    throw IoError(c.outputs.directory, "cannot create output directory");
  return (fs::path(c.outputs.directory) / name).string();
}

void note(const std::string &line) { std::cerr << "equips: " << line << '\n'; }

DType parse_dtype(const std::string &s) {
  if (s == "float32")
    return DType::float32;
  if (s == "float64")
    return DType::float64;
  throw ValidationError("dtype must be float32 or float64, got '" + s + "'");
}

std::string mesh_summary(const MeshStats &s) {
  return "triangles " + std::to_string(s.triangle_count) + ", vertices " +
         std::to_string(s.vertex_count) + ", area " + format_real(s.total_area, 8) +
         ", volume " + format_real(s.enclosed_volume, 8) + ", watertight " +
         (s.watertight ? "yes" : "no") + ", euler " + std::to_string(s.euler_characteristic);
}

int info(const std::string &path) {
  const std::string ext = fs::path(path).extension().string();
  if (ext == ".npy") {
    const VolumeHeader h = read_npy_header(path);
    std::cout << "npy " << dtype_name(h.dtype) << " " << h.shape.to_string() << ", header "
              << h.header_bytes << " bytes, payload " << h.payload_bytes << " bytes\n";
  } else if (ext == ".stl") {
    const StlContents s = read_stl(path);
    std::cout << "stl " << s.mesh.triangles.size() << " facets; " << mesh_summary(mesh_stats(s.mesh))
              << " (facets unshared as stored)\n";
  } else if (ext == ".csv") {
    const QuantityTable t = read_quantity_csv(path);
    if (const auto *s = std::get_if<PercentileSampleSet>(&t))
      std::cout << "quantity table, " << s->size() << " percentiles\n";
    else
      std::cout << "time-series table, " << std::get<std::vector<QuantitySeries>>(t).size()
                << " series\n";
  } else if (ext == ".json") {
    std::cout << canonical_config(load_run_config(path)) << '\n';
  } else {
    throw ValidationError("info supports .npy, .stl, .csv and .json files, got '" + path + "'");
  }
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Percentile-segmentation uncertainty propagation for voxel images"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EQUIPS_VERSION);

  CommonFlags common;
  std::string dtype = "float64";
  std::string segmentation;
  std::optional<double> percentile;
  std::string samples_csv, series_csv, family, info_path;
  std::optional<double> tolerance;
  std::size_t budget = 0;

  auto *probmap = app.add_subcommand("probmap", "write the probability map as probability.npy");
  add_common(probmap, common);
  probmap->add_option("--dtype", dtype, "float32 or float64");
  auto *umap = app.add_subcommand("umap", "write the uncertainty map as umap.npy");
  add_common(umap, common);
  auto *threshold = app.add_subcommand("threshold", "write seg_q<q>.npy per percentile");
  add_common(threshold, common);
  auto *simulate = app.add_subcommand("simulate", "evaluate the configured physics per percentile");
  add_common(simulate, common);
  simulate->add_option("--segmentation", segmentation, "uint8 NPY segmentation to evaluate instead")
      ->check(CLI::ExistingFile);
  simulate->add_option("--percentile", percentile, "percentile tag of --segmentation");
  auto *mesh = app.add_subcommand("mesh", "write mesh_q<q>.stl per percentile");
  add_common(mesh, common);
  auto *fit = app.add_subcommand("fit", "fit a characteristic distribution to a quantity table");
  add_common(fit, common);
  fit->add_option("--samples", samples_csv, "percentile,quantity CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--family", family, "normal or half_cauchy");
  fit->add_option("--tolerance", tolerance, "goodness-of-fit tolerance");
  fit->add_option("--budget", budget, "number of follow-up percentiles to suggest");
  auto *check = app.add_subcommand("check", "monotonicity or envelope diagnostics");
  add_common(check, common);
  auto *check_in = check->add_option_group("input");
  check_in->add_option("--samples", samples_csv, "percentile,quantity CSV")->check(CLI::ExistingFile);
  check_in->add_option("--series", series_csv, "percentile,time,value CSV")->check(CLI::ExistingFile);
  check_in->require_option(1);
  auto *sweep = app.add_subcommand("sweep", "run the full workflow and write the report bundle");
  add_common(sweep, common);
  auto *info_cmd = app.add_subcommand("info", "describe an NPY, STL, CSV or config file");
  info_cmd->add_option("file", info_path, "file to describe")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (info_cmd->parsed())
      return info(info_path);

    const RunConfig config = effective_config(common, config_has_threads(common.config));

    if (probmap->parsed()) {
      const ProbabilityMap pmap = load_probability_map(config);
      const std::string path = out_path(config, "probability.npy");
      write_npy(path, pmap, parse_dtype(dtype));
      note("wrote " + path);
    } else if (umap->parsed()) {
      const std::string path = out_path(config, "umap.npy");
      write_npy(path, uncertainty_map(load_probability_map(config)));
      note("wrote " + path);
    } else if (threshold->parsed()) {
      const ProbabilityMap pmap = load_probability_map(config);
      for (double q : config.percentiles) {
        const PhaseGrid seg = threshold_segmentation(pmap, q);
        const std::string path = out_path(config, "seg_q" + percentile_tag(q) + ".npy");
        write_npy(path, seg);
        note("wrote " + path + " (volume fraction " + format_real(volume_fraction(seg)) + ")");
      }
    } else if (simulate->parsed()) {
      std::vector<PercentileRecord> records;
      if (!segmentation.empty()) {
        const NpyVolume v = read_npy(segmentation, config.spacing);
        const PhaseGrid raw = v.to_phase_grid();
        const PhaseGrid seg =
            percentile ? PhaseGrid(raw.shape(), {raw.inside().begin(), raw.inside().end()}, *percentile,
                                   percentile_to_threshold(*percentile))
                       : raw;
        records.push_back(evaluate_physics(seg, config.physics, config.solver));
      } else {
        records = run_percentiles(load_probability_map(config), config.percentiles, config.physics,
                                  config.solver, config.threads);
      }
      std::string csv = "percentile,quantity\n";
      for (const auto &r : records)
        csv += format_real(r.percentile) + "," + format_real(r.value) + "\n";
      std::cout << csv;
      if (!common.out.empty()) {
        const std::string path = out_path(config, "simulate.csv");
        std::ofstream(path, std::ios::binary) << csv;
        note("wrote " + path);
      }
    } else if (mesh->parsed()) {
      const ProbabilityMap pmap = load_probability_map(config);
      for (double q : config.percentiles) {
        const TriangleMesh m = marching_cubes(pmap, percentile_to_threshold(q));
        const std::string path = out_path(config, "mesh_q" + percentile_tag(q) + ".stl");
        write_stl(m, path);
        note("wrote " + path + ": " + mesh_summary(mesh_stats(m)));
      }
    } else if (fit->parsed()) {
      const QuantityTable t = read_quantity_csv(samples_csv);
      const auto *set = std::get_if<PercentileSampleSet>(&t);
      if (!set)
        throw ValidationError(samples_csv + ": fit needs a percentile,quantity table");
      const Family fam = family.empty() ? config.fit.family : parse_family(family);
      const double tol = tolerance.value_or(config.fit.tolerance);
      const bool characteristic = fam == Family::normal && set->size() == 3 &&
                                  set->contains(15.9) && set->contains(50.0) && set->contains(84.1);
      const CharacteristicDistribution d =
          characteristic ? fit_characteristic_normal(*set) : fit_quantile_family(*set, fam);
      const double gof = goodness_of_fit(*set, d);
      std::cout << "family " << family_name(d.family) << "\nlocation " << format_real(d.location)
                << "\nscale " << format_real(d.scale) << "\nresidual_norm "
                << format_real(d.residual_norm) << "\ngoodness_of_fit " << format_real(gof)
                << "\nadequate " << (gof <= tol ? "yes" : "no") << "\n";
      const auto next = suggest_percentiles(*set, d, tol, budget);
      std::cout << "suggested";
      for (double q : next)
        std::cout << ' ' << format_real(q);
      std::cout << '\n';
      if (!common.out.empty()) {
        const std::string path = out_path(config, "distribution.csv");
        write_distribution_csv(*set, d, path);
        note("wrote " + path);
      }
    } else if (check->parsed()) {
      if (!samples_csv.empty()) {
        const QuantityTable t = read_quantity_csv(samples_csv);
        const auto *set = std::get_if<PercentileSampleSet>(&t);
        if (!set)
          throw ValidationError(samples_csv + ": --samples needs a percentile,quantity table");
        const MonotonicityReport m = monotonicity_check(*set);
        std::cout << "monotone " << (m.monotone ? "yes" : "no") << " ("
                  << (m.increasing ? "increasing" : "decreasing") << ")\n";
        for (const auto &v : m.violations)
          std::cout << "violation " << format_real(v.lower_percentile) << " -> "
                    << format_real(v.upper_percentile) << ": " << format_real(v.lower_value)
                    << " then " << format_real(v.upper_value) << '\n';
      } else {
        const QuantityTable t = read_quantity_csv(series_csv);
        const auto *series = std::get_if<std::vector<QuantitySeries>>(&t);
        if (!series)
          throw ValidationError(series_csv + ": --series needs a percentile,time,value table");
        const EnvelopeReport r = envelope_check(*series);
        auto print = [](const char *band, const std::vector<EnvelopeViolation> &vs) {
          std::cout << band << " violations " << vs.size() << '\n';
          for (const auto &v : vs)
            std::cout << "  q " << format_real(v.percentile) << " t " << format_real(v.time)
                      << " value " << format_real(v.value) << " outside [" << format_real(v.lower)
                      << ", " << format_real(v.upper) << "]\n";
        };
        print("15.9/84.1", r.sigma_violations);
        if (r.has_decile_band)
          print("10/90", r.decile_violations);
      }
    } else if (sweep->parsed()) {
      const SweepResult r = run_sweep(config, note);
      std::cout << format_distribution_csv(*r.samples, r.fit);
    }
    return kOk;
  } catch (const ValidationError &e) {
    std::cerr << "equips: invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const SolverError &e) {
    std::cerr << "equips: solver did not converge: " << e.what() << '\n';
    return kSolver;
  } catch (const IoError &e) {
    std::cerr << "equips: I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception &e) {
    std::cerr << "equips: " << e.what() << '\n';
    return 1;
  }
}
