#include "equips/config.hpp"

#include "equips/error.hpp"
#include "equips/text.hpp"
#include "equips/voxel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace equips {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class Reader {
public:
  Reader(std::string source, std::string base) : source_(std::move(source)), base_(std::move(base)) {}

  [[noreturn]] void fail(const std::string &where, const std::string &what) const {
    throw ValidationError(source_ + ": " + where + ": " + what);
  }

  void only_keys(const json &obj, const std::string &where,
                 std::initializer_list<const char *> allowed) const {
    if (!obj.is_object())
      fail(where, "expected an object");
    for (const auto &[key, value] : obj.items()) {
      (void)value;
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; }))
        fail(where, "unknown key '" + key + "'");
    }
  }

  double number(const json &v, const std::string &where) const {
    if (!v.is_number())
      fail(where, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
      fail(where, "must be finite");
    return x;
  }

  std::size_t count(const json &v, const std::string &where) const {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      fail(where, "expected a non-negative integer");
    return v.get<std::size_t>();
  }

  std::string string(const json &v, const std::string &where) const {
    if (!v.is_string())
      fail(where, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const json &v, const std::string &where) const {
    if (!v.is_boolean())
      fail(where, "expected true or false");
    return v.get<bool>();
  }

  std::string path(const json &v, const std::string &where) const {
    const fs::path p = string(v, where);
    return p.is_absolute() ? p.string() : (fs::path(base_) / p).lexically_normal().string();
  }

  std::array<double, 3> triple(const json &v, const std::string &where) const {
    if (!v.is_array() || v.size() != 3)
      fail(where, "expected three numbers");
    return {number(v[0], where), number(v[1], where), number(v[2], where)};
  }

  Conductivity conductivity(const json &v, const std::string &where) const {
    if (v.is_number())
      return Conductivity::isotropic(number(v, where));
    const auto k = triple(v, where);
    return {k[0], k[1], k[2]};
  }

  Axis axis(const json &v, const std::string &where) const {
    try {
      return parse_axis(string(v, where));
    } catch (const ValidationError &e) {
      fail(where, e.what());
    }
  }

  PhantomGeometry geometry(const json &g) const {
    const std::string where = "input.phantom.geometry";
    if (!g.is_object() || !g.contains("type"))
      fail(where, "expected an object with a 'type'");
    const std::string type = string(g["type"], where + ".type");
    if (type == "sphere") {
      only_keys(g, where, {"type", "center", "radius"});
      SphereGeometry s;
      if (g.contains("center"))
        s.center = triple(g["center"], where + ".center");
      if (g.contains("radius"))
        s.radius = number(g["radius"], where + ".radius");
      return s;
    }
    if (type == "slab") {
      only_keys(g, where, {"type", "axis", "fraction"});
      SlabGeometry s;
      if (g.contains("axis"))
        s.axis = axis(g["axis"], where + ".axis");
      if (g.contains("fraction"))
        s.fraction = number(g["fraction"], where + ".fraction");
      return s;
    }
    if (type == "channels") {
      only_keys(g, where, {"type", "axis", "period", "width"});
      ChannelGeometry c;
      if (g.contains("axis"))
        c.axis = axis(g["axis"], where + ".axis");
      if (g.contains("period"))
        c.period = number(g["period"], where + ".period");
      if (g.contains("width"))
        c.width = number(g["width"], where + ".width");
      return c;
    }
    if (type == "lattice") {
      only_keys(g, where, {"type", "period", "radius"});
      LatticeGeometry l;
      if (g.contains("period"))
        l.period = number(g["period"], where + ".period");
      if (g.contains("radius"))
        l.radius = number(g["radius"], where + ".radius");
      return l;
    }
    fail(where + ".type", "unknown geometry '" + type + "'");
  }

  InputSource input(const json &in) const {
    only_keys(in, "input", {"phantom", "stack", "probability_map"});
    if (in.size() != 1)
      fail("input", "exactly one of phantom, stack or probability_map is required");
    if (in.contains("phantom")) {
      const json &p = in["phantom"];
      only_keys(p, "input.phantom", {"geometry", "shape", "samples", "blur_width", "flip_noise"});
      PhantomInput out;
      if (p.contains("geometry"))
        out.spec.geometry = geometry(p["geometry"]);
      if (p.contains("shape")) {
        const json &s = p["shape"];
        if (!s.is_array() || s.size() != 3)
          fail("input.phantom.shape", "expected [nx, ny, nz]");
        for (std::size_t i = 0; i < 3; ++i)
          out.extents[i] = count(s[i], "input.phantom.shape");
      }
      if (p.contains("samples"))
        out.samples = count(p["samples"], "input.phantom.samples");
      if (p.contains("blur_width"))
        out.spec.blur_width = number(p["blur_width"], "input.phantom.blur_width");
      if (p.contains("flip_noise"))
        out.spec.flip_noise = number(p["flip_noise"], "input.phantom.flip_noise");
      return out;
    }
    if (in.contains("stack")) {
      const json &s = in["stack"];
      if (!s.is_array())
        fail("input.stack", "expected a list of NPY paths");
      StackInput out;
      for (const json &p : s)
        out.paths.push_back(path(p, "input.stack"));
      return out;
    }
    return ProbabilityMapInput{path(in["probability_map"], "input.probability_map")};
  }

  PhysicsConfig physics(const json &p) const {
    only_keys(p, "physics", {"kind", "axis", "k_inside", "k_outside", "potential_drop", "csv"});
    PhysicsConfig out;
    if (p.contains("kind")) {
      try {
        out.kind = parse_physics_kind(string(p["kind"], "physics.kind"));
      } catch (const ValidationError &e) {
        fail("physics.kind", e.what());
      }
    }
    if (p.contains("axis"))
      out.props.axis = axis(p["axis"], "physics.axis");
    if (p.contains("k_inside"))
      out.props.k_inside = conductivity(p["k_inside"], "physics.k_inside");
    if (p.contains("k_outside"))
      out.props.k_outside = conductivity(p["k_outside"], "physics.k_outside");
    if (p.contains("potential_drop"))
      out.props.potential_drop = number(p["potential_drop"], "physics.potential_drop");
    if (p.contains("csv"))
      out.external_csv = path(p["csv"], "physics.csv");
    return out;
  }

private:
  std::string source_;
  std::string base_;
};

json conductivity_json(const Conductivity &k) { return json::array({k.kx, k.ky, k.kz}); }

json geometry_json(const PhantomGeometry &g) {
  return std::visit(
      [](const auto &x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SphereGeometry>) {
          json j{{"type", "sphere"}, {"radius", x.radius}};
          if (x.center)
            j["center"] = json::array({(*x.center)[0], (*x.center)[1], (*x.center)[2]});
          return j;
        } else if constexpr (std::is_same_v<T, SlabGeometry>) {
          return {{"type", "slab"}, {"axis", axis_name(x.axis)}, {"fraction", x.fraction}};
        } else if constexpr (std::is_same_v<T, ChannelGeometry>) {
          return {{"type", "channels"}, {"axis", axis_name(x.axis)}, {"period", x.period},
                  {"width", x.width}};
        } else {
          return {{"type", "lattice"}, {"period", x.period}, {"radius", x.radius}};
        }
      },
      g);
}

} // namespace

PhysicsKind parse_physics_kind(const std::string &name) {
  if (name == "volume_fraction")
    return PhysicsKind::volume_fraction;
  if (name == "conductivity")
    return PhysicsKind::conductivity;
  if (name == "tortuosity")
    return PhysicsKind::tortuosity;
  if (name == "external")
    return PhysicsKind::external;
  throw ValidationError("unknown physics '" + name +
                        "' (expected volume_fraction, conductivity, tortuosity or external)");
}

const char *physics_kind_name(PhysicsKind kind) {
  switch (kind) {
  case PhysicsKind::volume_fraction:
    return "volume_fraction";
  case PhysicsKind::conductivity:
    return "conductivity";
  case PhysicsKind::tortuosity:
    return "tortuosity";
  case PhysicsKind::external:
    return "external";
  }
  return "?";
}

void RunConfig::validate() const {
  if (percentiles.empty())
    throw ValidationError("at least one percentile is required");
  std::vector<double> sorted = percentiles;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i] >= 0.0 && sorted[i] <= 100.0))
      throw ValidationError("percentile " + format_real(sorted[i]) + " is outside [0, 100]");
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw ValidationError("percentile " + format_real(sorted[i]) + " is listed twice");
  }
  for (double q : standard_percentiles())
    if (std::find(sorted.begin(), sorted.end(), q) == sorted.end())
      throw ValidationError("percentiles must include the standard " + format_real(q));
  (void)GridShape(1, 1, 1, spacing);
  if (class_label < 0 || class_label > 255)
    throw ValidationError("class_label must be in [0, 255]");
  if (const auto *p = std::get_if<PhantomInput>(&input)) {
    if (p->samples == 0)
      throw ValidationError("phantom sample count must be >= 1");
    p->spec.validate(GridShape(p->extents[0], p->extents[1], p->extents[2], spacing));
  }
  if (const auto *s = std::get_if<StackInput>(&input); s && s->paths.empty())
    throw ValidationError("stack input needs at least one NPY path");
  if (physics.kind == PhysicsKind::conductivity)
    physics.props.validate();
  if (physics.kind == PhysicsKind::external && physics.external_csv.empty())
    throw ValidationError("external physics needs a 'csv' table");
  if (!(solver.tolerance > 0.0))
    throw ValidationError("solver tolerance must be > 0");
  if (!(fit.tolerance >= 0.0))
    throw ValidationError("fit tolerance must be >= 0");
  if (threads == 0)
    throw ValidationError("threads must be >= 1");
  if (outputs.directory.empty())
    throw ValidationError("output directory must not be empty");
}

RunConfig parse_run_config(const std::string &json_text, const std::string &base_directory,
                           const std::string &source) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error &e) {
    throw ValidationError(source + ": " + e.what());
  }
  const Reader r(source, base_directory);
  r.only_keys(root, "config",
              {"input", "spacing", "class_label", "percentiles", "physics", "solver", "fit",
               "outputs", "series", "seed", "threads"});
  RunConfig c;
  if (root.contains("input"))
    c.input = r.input(root["input"]);
  if (root.contains("spacing")) {
    const auto s = r.triple(root["spacing"], "spacing");
    c.spacing = {s[0], s[1], s[2]};
  }
  if (root.contains("class_label"))
    c.class_label = static_cast<int>(r.count(root["class_label"], "class_label"));
  if (root.contains("percentiles")) {
    const json &p = root["percentiles"];
    if (!p.is_array())
      r.fail("percentiles", "expected a list of numbers");
    c.percentiles.clear();
    for (const json &q : p)
      c.percentiles.push_back(r.number(q, "percentiles"));
  }
  if (root.contains("physics"))
    c.physics = r.physics(root["physics"]);
  if (root.contains("solver")) {
    const json &s = root["solver"];
    r.only_keys(s, "solver", {"tolerance", "max_iterations"});
    if (s.contains("tolerance"))
      c.solver.tolerance = r.number(s["tolerance"], "solver.tolerance");
    if (s.contains("max_iterations"))
      c.solver.max_iterations = r.count(s["max_iterations"], "solver.max_iterations");
  }
  if (root.contains("fit")) {
    const json &f = root["fit"];
    r.only_keys(f, "fit", {"family", "tolerance", "refine_budget"});
    if (f.contains("family")) {
      try {
        c.fit.family = parse_family(r.string(f["family"], "fit.family"));
      } catch (const ValidationError &e) {
        r.fail("fit.family", e.what());
      }
    }
    if (f.contains("tolerance"))
      c.fit.tolerance = r.number(f["tolerance"], "fit.tolerance");
    if (f.contains("refine_budget"))
      c.fit.refine_budget = r.count(f["refine_budget"], "fit.refine_budget");
  }
  if (root.contains("outputs")) {
    const json &o = root["outputs"];
    r.only_keys(o, "outputs", {"directory", "stl", "uncertainty_map"});
    if (o.contains("directory"))
      c.outputs.directory = r.path(o["directory"], "outputs.directory");
    if (o.contains("stl"))
      c.outputs.stl = r.boolean(o["stl"], "outputs.stl");
    if (o.contains("uncertainty_map"))
      c.outputs.uncertainty_map = r.boolean(o["uncertainty_map"], "outputs.uncertainty_map");
  } else {
    c.outputs.directory = r.path(json(c.outputs.directory), "outputs.directory");
  }
  if (root.contains("series"))
    c.series_csv = r.path(root["series"], "series");
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned())
      r.fail("seed", "expected a non-negative integer");
    c.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("threads"))
    c.threads = r.count(root["threads"], "threads");
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(path, "cannot open configuration file");
  std::ostringstream text;
  text << in.rdbuf();
  if (in.bad())
    throw IoError(path, "cannot read configuration file");
  const fs::path parent = fs::path(path).parent_path();
  return parse_run_config(text.str(), parent.empty() ? "." : parent.string(), path);
}

std::string canonical_config(const RunConfig &c) {
  json j;
  std::visit(
      [&](const auto &in) {
        using T = std::decay_t<decltype(in)>;
        if constexpr (std::is_same_v<T, PhantomInput>) {
          j["input"]["phantom"] = {{"geometry", geometry_json(in.spec.geometry)},
                                   {"shape", in.extents},
                                   {"samples", in.samples},
                                   {"blur_width", in.spec.blur_width},
                                   {"flip_noise", in.spec.flip_noise}};
        } else if constexpr (std::is_same_v<T, StackInput>) {
          j["input"]["stack"] = in.paths;
        } else {
          j["input"]["probability_map"] = in.path;
        }
      },
      c.input);
  j["spacing"] = json::array({c.spacing.dx, c.spacing.dy, c.spacing.dz});
  j["class_label"] = c.class_label;
  j["percentiles"] = c.percentiles;
  j["physics"] = {{"kind", physics_kind_name(c.physics.kind)},
                  {"axis", axis_name(c.physics.props.axis)},
                  {"k_inside", conductivity_json(c.physics.props.k_inside)},
                  {"k_outside", conductivity_json(c.physics.props.k_outside)},
                  {"potential_drop", c.physics.props.potential_drop}};
  if (c.physics.kind == PhysicsKind::external)
    j["physics"]["csv"] = c.physics.external_csv;
  j["solver"] = {{"tolerance", c.solver.tolerance}, {"max_iterations", c.solver.max_iterations}};
  j["fit"] = {{"family", family_name(c.fit.family)},
              {"tolerance", c.fit.tolerance},
              {"refine_budget", c.fit.refine_budget}};
  j["outputs"] = {{"directory", c.outputs.directory},
                  {"stl", c.outputs.stl},
                  {"uncertainty_map", c.outputs.uncertainty_map}};
  if (c.series_csv)
    j["series"] = *c.series_csv;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j.dump();
}

std::vector<double> parse_percentile_list(const std::string &text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const auto field = std::string_view(text).substr(start, comma - start);
    const auto value = parse_real(field);
    if (!value)
      throw ValidationError("bad percentile '" + std::string(field) + "' in list '" + text + "'");
    out.push_back(*value);
    start = comma + 1;
  }
  return out;
}

} // namespace equips
