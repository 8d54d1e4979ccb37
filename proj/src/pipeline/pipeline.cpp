#include "equips/pipeline.hpp"

#include "equips/csv.hpp"
#include "equips/error.hpp"
#include "equips/mesh.hpp"
#include "equips/npy.hpp"
#include "equips/stl.hpp"
#include "equips/text.hpp"
#include "equips/voxel.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#ifndef EQUIPS_VERSION
#define EQUIPS_VERSION "unknown"
#endif

namespace equips {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string stage_prefix(const std::string &stage, std::optional<double> percentile) {
  std::string p = "stage '" + stage + "'";
  if (percentile)
    p += " at percentile " + percentile_tag(*percentile);
  return p + ": ";
}

// Rethrows the in-flight exception with stage context, preserving its type
// so callers can still map it to an exit status.
[[noreturn]] void rethrow_in_stage(const std::string &stage, std::optional<double> percentile) {
  const std::string prefix = stage_prefix(stage, percentile);
  try {
    throw;
  } catch (const IoError &e) {
    std::string what = e.what();
    const std::string head = e.path() + ": ";
    if (what.rfind(head, 0) == 0)
      what.erase(0, head.size());
    throw IoError(e.path(), prefix + what);
  } catch (const SolverError &e) {
    throw SolverError(prefix + e.what(), e.residual_history());
  } catch (const ValidationError &e) {
    throw ValidationError(prefix + e.what());
  } catch (const std::bad_alloc &) {
    throw;
  } catch (const std::exception &e) {
    throw Error(prefix + e.what());
  }
}

template <typename F> auto in_stage(const std::string &stage, std::optional<double> percentile, F &&f) {
  try {
    return f();
  } catch (...) {
    rethrow_in_stage(stage, percentile);
  }
}

void write_text_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError(path, "cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out)
    throw IoError(path, "write failed");
}

json distribution_json(const CharacteristicDistribution &d) {
  return {{"family", family_name(d.family)},
          {"location", d.location},
          {"scale", d.scale},
          {"residual_norm", d.residual_norm},
          {"center", d.center()}};
}

json record_json(const PercentileRecord &r) {
  json j{{"percentile", r.percentile},
         {"threshold", r.threshold},
         {"value", r.value},
         {"volume_fraction", r.volume_fraction},
         {"iterations", r.iterations}};
  if (r.k_eff)
    j["k_eff"] = *r.k_eff;
  if (r.tortuosity)
    j["tortuosity"] = *r.tortuosity;
  if (r.percolating)
    j["percolating"] = *r.percolating;
  return j;
}

json violations_json(const std::vector<EnvelopeViolation> &vs) {
  json out = json::array();
  for (const auto &v : vs)
    out.push_back({{"percentile", v.percentile},
                   {"time", v.time},
                   {"value", v.value},
                   {"lower", v.lower},
                   {"upper", v.upper}});
  return out;
}

json monotonicity_json(const MonotonicityReport &m) {
  json v = json::array();
  for (const auto &x : m.violations)
    v.push_back({{"lower_percentile", x.lower_percentile},
                 {"lower_value", x.lower_value},
                 {"upper_percentile", x.upper_percentile},
                 {"upper_value", x.upper_value}});
  return {{"monotone", m.monotone},
          {"direction", m.increasing ? "increasing" : "decreasing"},
          {"violations", v}};
}

json envelope_json(const EnvelopeReport &e) {
  json j{{"times", e.times}, {"sigma_band", {{"lower", 15.9}, {"upper", 84.1}}},
         {"sigma_violations", violations_json(e.sigma_violations)}};
  if (e.has_decile_band) {
    j["decile_band"] = {{"lower", 10.0}, {"upper", 90.0}};
    j["decile_violations"] = violations_json(e.decile_violations);
  }
  return j;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

PercentileSampleSet samples_of(const std::vector<PercentileRecord> &records) {
  std::vector<PercentileSample> s;
  s.reserve(records.size());
  for (const auto &r : records)
    s.push_back({r.percentile, r.value});
  return PercentileSampleSet(std::move(s));
}

CharacteristicDistribution initial_fit(const PercentileSampleSet &samples, Family family) {
  return family == Family::normal ? fit_characteristic_normal(samples)
                                  : fit_quantile_family(samples, family);
}

// After refinement every family is refit on all samples; the smallest CDF
// deviation wins, ties going to the configured family.
CharacteristicDistribution refit(const PercentileSampleSet &samples, Family preferred) {
  CharacteristicDistribution best = fit_quantile_family(samples, preferred);
  double best_gof = goodness_of_fit(samples, best);
  for (Family f : {Family::normal, Family::half_cauchy}) {
    if (f == preferred)
      continue;
    CharacteristicDistribution d;
    try {
      d = fit_quantile_family(samples, f);
    } catch (const ValidationError &) {
      continue;
    }
    const double g = goodness_of_fit(samples, d);
    if (g < best_gof) {
      best = d;
      best_gof = g;
    }
  }
  return best;
}

PercentileRecord evaluate(const PhaseGrid &seg, const PhysicsConfig &physics,
                          const SolverOptions &solver, const PercentileSampleSet *external) {
  PercentileRecord r;
  r.percentile = seg.percentile().value_or(0.0);
  r.threshold = seg.threshold().value_or(1.0 - r.percentile / 100.0);
  r.volume_fraction = volume_fraction(seg);
  switch (physics.kind) {
  case PhysicsKind::volume_fraction:
    r.value = r.volume_fraction;
    break;
  case PhysicsKind::conductivity: {
    const TransportResult t = effective_transport(seg, physics.props, solver);
    r.k_eff = t.k_eff;
    r.percolating = t.percolating;
    r.iterations = t.iterations;
    r.value = t.k_eff;
    break;
  }
  case PhysicsKind::tortuosity: {
    const TransportResult t = tortuosity(seg, physics.props.axis, solver);
    r.k_eff = t.k_eff;
    r.percolating = t.percolating;
    r.iterations = t.iterations;
    if (!t.tortuosity)
      throw ValidationError("tortuosity is undefined: the segmentation has no pore space");
    r.tortuosity = t.tortuosity;
    r.value = *t.tortuosity;
    break;
  }
  case PhysicsKind::external:
    if (!external || !seg.percentile())
      throw ValidationError("external physics needs a quantity table and a tagged percentile");
    r.value = interpolate_quantity(*external, *seg.percentile());
    break;
  }
  return r;
}

std::optional<PercentileSampleSet> load_external(const PhysicsConfig &physics) {
  if (physics.kind != PhysicsKind::external)
    return std::nullopt;
  auto table = read_quantity_csv(physics.external_csv);
  if (auto *set = std::get_if<PercentileSampleSet>(&table))
    return std::move(*set);
  throw ValidationError(physics.external_csv +
                        ": external physics needs a 'percentile,quantity' table");
}

} // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(path, "cannot open for hashing");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

std::string percentile_tag(double percentile) { return format_real(percentile, 6); }

double interpolate_quantity(const PercentileSampleSet &table, double percentile) {
  const auto s = table.samples();
  if (auto exact = table.value_at(percentile))
    return *exact;
  if (percentile < s.front().percentile || percentile > s.back().percentile)
    throw ValidationError("percentile " + format_real(percentile) +
                          " is outside the quantity table range [" +
                          format_real(s.front().percentile) + ", " +
                          format_real(s.back().percentile) + "]");
  const auto hi = std::upper_bound(s.begin(), s.end(), percentile,
                                   [](double q, const PercentileSample &x) { return q < x.percentile; });
  const auto lo = hi - 1;
  const double w = (percentile - lo->percentile) / (hi->percentile - lo->percentile);
  return lo->value + w * (hi->value - lo->value);
}

ProbabilityMap load_probability_map(const RunConfig &config) {
  return std::visit(
      [&](const auto &in) -> ProbabilityMap {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, PhantomInput>) {
          PhantomSpec spec = in.spec;
          spec.seed = config.seed;
          const GridShape shape(in.extents[0], in.extents[1], in.extents[2], config.spacing);
          const SyntheticStack st = synthetic_stack(spec, in.samples, shape);
          std::vector<std::vector<std::uint8_t>> samples;
          samples.reserve(st.stack.size());
          for (std::size_t i = 0; i < st.stack.size(); ++i)
            samples.emplace_back(st.stack.sample(i).begin(), st.stack.sample(i).end());
          return build_class_probability_map(shape, samples, config.class_label);
        } else if constexpr (std::is_same_v<T, StackInput>) {
          std::vector<std::vector<std::uint8_t>> samples;
          std::optional<GridShape> shape;
          for (std::size_t i = 0; i < in.paths.size(); ++i) {
            NpyVolume v = read_npy(in.paths[i], config.spacing);
            if (v.header.dtype != DType::uint8)
              throw IoError(in.paths[i], std::string("stack samples must be uint8, found ") +
                                             dtype_name(v.header.dtype));
            if (shape && !shape->same_extents(v.header.shape))
              throw ValidationError("stack sample " + std::to_string(i) + " (" + in.paths[i] +
                                    ") has shape " + v.header.shape.to_string() + ", expected " +
                                    shape->to_string());
            shape = v.header.shape;
            samples.push_back(v.labels());
          }
          return build_class_probability_map(*shape, samples, config.class_label);
        } else {
          return read_npy(in.path, config.spacing).to_probability_map(config.class_label);
        }
      },
      config.input);
}

PercentileRecord evaluate_physics(const PhaseGrid &seg, const PhysicsConfig &physics,
                                  const SolverOptions &solver) {
  const auto external = load_external(physics);
  return evaluate(seg, physics, solver, external ? &*external : nullptr);
}

std::vector<PercentileRecord> run_percentiles(const ProbabilityMap &pmap,
                                              const std::vector<double> &percentiles,
                                              const PhysicsConfig &physics,
                                              const SolverOptions &solver, std::size_t threads,
                                              std::vector<PercentileRecord> *completed) {
  const auto external = in_stage("physics", std::nullopt, [&] { return load_external(physics); });
  const std::size_t n = percentiles.size();
  std::vector<std::optional<PercentileRecord>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::vector<const char *> failed_stage(n, "");
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const char *stage = "threshold";
      try {
        const auto start = Clock::now();
        const PhaseGrid seg = threshold_segmentation(pmap, percentiles[i]);
        stage = "simulate";
        PercentileRecord r = evaluate(seg, physics, solver, external ? &*external : nullptr);
        r.seconds = seconds_since(start);
        results[i] = std::move(r);
      } catch (...) {
        errors[i] = std::current_exception();
        failed_stage[i] = stage;
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto &t : pool)
    t.join();

  std::vector<PercentileRecord> out;
  for (auto &r : results)
    if (r)
      out.push_back(*r);
  if (completed)
    *completed = out;

  // Report the lowest failing percentile so the error does not depend on
  // scheduling.
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < n; ++i)
    if (errors[i] && (!first || percentiles[i] < percentiles[*first]))
      first = i;
  if (first) {
    try {
      std::rethrow_exception(errors[*first]);
    } catch (...) {
      rethrow_in_stage(failed_stage[*first], percentiles[*first]);
    }
  }
  return out;
}

SweepResult run_sweep(const RunConfig &config, const Logger &log) {
  config.validate();
  const auto say = [&](const std::string &line) {
    if (log)
      log(line);
  };
  const auto run_start = Clock::now();
  SweepResult result;
  json timings = json::object();
  const fs::path out_dir = config.outputs.directory;

  in_stage("output", std::nullopt, [&] {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir))
      throw IoError(out_dir.string(), "cannot create output directory");
  });

  auto emit = [&](const std::string &name, auto &&writer) {
    const std::string path = (out_dir / name).string();
    writer(path);
    std::erase_if(result.files, [&](const OutputFile &f) { return f.name == name; });
    result.files.push_back({name, sha256_file(path), static_cast<std::size_t>(fs::file_size(path))});
  };

  auto write_distribution = [&] {
    std::sort(result.records.begin(), result.records.end(),
              [](const auto &a, const auto &b) { return a.percentile < b.percentile; });
    if (result.records.empty())
      return;
    emit("distribution.csv", [&](const std::string &path) {
      write_distribution_csv(samples_of(result.records), result.fit, path);
    });
  };

  auto write_manifest = [&](const std::optional<json> &failure) {
    json files = json::array();
    for (const auto &f : result.files)
      files.push_back({{"path", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    timings["total"] = seconds_since(run_start);
    const std::string canonical = canonical_config(config);
    json manifest{{"tool", "equips"},
                  {"version", EQUIPS_VERSION},
                  {"config", json::parse(canonical)},
                  {"config_sha256", sha256_hex(canonical)},
                  {"seed", config.seed},
                  {"threads", config.threads},
                  {"partial", result.partial},
                  {"files", files},
                  {"timings_seconds", timings},
                  {"created_utc", utc_timestamp()}};
    if (failure)
      manifest["failure"] = *failure;
    write_text_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
  };

  const char *current_stage = "load";
  // NaN while no percentile-specific stage is running.
  double current_percentile = std::nan("");
  try {
    auto t = Clock::now();
    say("loading probability map");
    const ProbabilityMap pmap = in_stage("load", std::nullopt, [&] { return load_probability_map(config); });
    timings["load"] = seconds_since(t);
    say("probability map " + pmap.shape().to_string());

    if (config.outputs.uncertainty_map) {
      current_stage = "umap";
      in_stage("umap", std::nullopt, [&] {
        emit("umap.npy", [&](const std::string &path) { write_npy(path, uncertainty_map(pmap)); });
      });
    }

    current_stage = "simulate";
    t = Clock::now();
    std::vector<PercentileRecord> done;
    try {
      result.records = run_percentiles(pmap, config.percentiles, config.physics, config.solver,
                                       config.threads, &done);
    } catch (...) {
      result.records = std::move(done);
      throw;
    }
    for (const auto &r : result.records)
      say("percentile " + percentile_tag(r.percentile) + ": " + physics_kind_name(config.physics.kind) +
          " = " + format_real(r.value));

    current_stage = "fit";
    PercentileSampleSet samples = samples_of(result.records);
    CharacteristicDistribution fit =
        in_stage("fit", std::nullopt, [&] { return initial_fit(samples, config.fit.family); });
    double gof = goodness_of_fit(samples, fit);
    const CharacteristicDistribution first_fit = fit;
    say("fit " + std::string(family_name(fit.family)) + " location " + format_real(fit.location) +
        " scale " + format_real(fit.scale) + ", max CDF deviation " + format_real(gof));

    std::size_t budget = config.fit.refine_budget;
    while (budget > 0 && gof > config.fit.tolerance) {
      const auto extra = suggest_percentiles(samples, fit, config.fit.tolerance, budget);
      if (extra.empty())
        break;
      current_stage = "refine";
      std::vector<PercentileRecord> more_done;
      std::vector<PercentileRecord> more;
      try {
        more = run_percentiles(pmap, extra, config.physics, config.solver, config.threads,
                               &more_done);
      } catch (...) {
        result.records.insert(result.records.end(), more_done.begin(), more_done.end());
        throw;
      }
      result.records.insert(result.records.end(), more.begin(), more.end());
      result.refined.insert(result.refined.end(), extra.begin(), extra.end());
      budget -= extra.size();
      samples = samples_of(result.records);
      fit = in_stage("fit", std::nullopt, [&] { return refit(samples, config.fit.family); });
      gof = goodness_of_fit(samples, fit);
      say("refined with " + std::to_string(extra.size()) + " percentile(s); max CDF deviation " +
          format_real(gof));
    }
    timings["simulate"] = seconds_since(t);
    result.samples = samples;
    result.fit = fit;
    result.goodness_of_fit = gof;
    result.initial_fit = first_fit;
    result.initial_goodness_of_fit = goodness_of_fit(samples, first_fit);
    json initial{{"fit", distribution_json(first_fit)},
                 {"goodness_of_fit", result.initial_goodness_of_fit}};
    result.monotonicity = monotonicity_check(samples);

    if (config.series_csv) {
      current_stage = "envelope";
      result.envelope = in_stage("envelope", std::nullopt, [&] {
        auto table = read_quantity_csv(*config.series_csv);
        auto *series = std::get_if<std::vector<QuantitySeries>>(&table);
        if (!series)
          throw ValidationError(*config.series_csv + ": envelope check needs 'percentile,time,value' rows");
        return envelope_check(*series);
      });
    }

    std::sort(result.records.begin(), result.records.end(),
              [](const auto &a, const auto &b) { return a.percentile < b.percentile; });

    if (config.outputs.stl) {
      current_stage = "mesh";
      t = Clock::now();
      for (const auto &r : result.records) {
        if (!(r.threshold > 0.0 && r.threshold < 1.0)) {
          say("mesh skipped at percentile " + percentile_tag(r.percentile) + " (threshold " +
              format_real(r.threshold) + " has no interior level set)");
          continue;
        }
        current_percentile = r.percentile;
        in_stage("mesh", r.percentile, [&] {
          const TriangleMesh mesh = marching_cubes(pmap, r.threshold);
          emit("mesh_q" + percentile_tag(r.percentile) + ".stl",
               [&](const std::string &path) { write_stl(mesh, path); });
        });
      }
      current_percentile = std::nan("");
      timings["mesh"] = seconds_since(t);
    }

    current_stage = "report";
    in_stage("report", std::nullopt, [&] {
      write_distribution();
      json records = json::array();
      for (const auto &r : result.records)
        records.push_back(record_json(r));
      json report{{"physics", physics_kind_name(config.physics.kind)},
                  {"records", records},
                  {"initial", initial},
                  {"fit", distribution_json(fit)},
                  {"goodness_of_fit", gof},
                  {"fit_tolerance", config.fit.tolerance},
                  {"fit_adequate", gof <= config.fit.tolerance},
                  {"refined_percentiles", result.refined},
                  {"monotonicity", monotonicity_json(*result.monotonicity)},
                  {"cdf_reordered", empirical_cdf(samples).reordered}};
      if (result.envelope)
        report["envelope"] = envelope_json(*result.envelope);
      emit("report.json", [&](const std::string &path) { write_text_file(path, report.dump(2) + "\n"); });
      write_manifest(std::nullopt);
    });
    say("wrote " + std::to_string(result.files.size() + 1) + " files to " + out_dir.string());
    return result;
  } catch (const std::exception &e) {
    result.partial = true;
    result.fit.reset();
    json failure{{"stage", current_stage}, {"message", e.what()}};
    if (!std::isnan(current_percentile))
      failure["percentile"] = current_percentile;
    try {
      write_distribution();
      write_manifest(failure);
    } catch (const std::exception &) {
      // Keep the original error; the bundle is best effort here.
    }
    throw;
  }
}

} // namespace equips
