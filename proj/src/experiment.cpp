#include "berrylab/experiment.hpp"

#include "berrylab/error.hpp"
#include "berrylab/hamiltonian.hpp"
#include "berrylab/hannay.hpp"
#include "berrylab/magnetic_translation.hpp"
#include "berrylab/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace berrylab {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::spectrum: return "spectrum";
    case ExperimentKind::berry: return "berry";
    case ExperimentKind::curvature: return "curvature";
    case ExperimentKind::adiabatic: return "adiabatic";
    case ExperimentKind::hannay: return "hannay";
    case ExperimentKind::check: return "check";
  }
  return "?";
}

std::string to_string(TransportMethod method) {
  return method == TransportMethod::translated ? "translated" : "resolved";
}

namespace {

const char* ramp_name(Ramp r) { return r == Ramp::global ? "global" : "per_edge"; }

// ---- schema -----------------------------------------------------------------

json number(std::optional<double> minimum = {}, std::optional<double> exclusive = {},
            std::optional<double> maximum = {}) {
  json s = {{"type", "number"}};
  if (minimum) s["minimum"] = *minimum;
  if (exclusive) s["exclusiveMinimum"] = *exclusive;
  if (maximum) s["maximum"] = *maximum;
  return s;
}

json integer(std::optional<double> minimum = {}) {
  json s = {{"type", "integer"}};
  if (minimum) s["minimum"] = *minimum;
  return s;
}

json one_of(std::initializer_list<const char*> values) {
  json e = json::array();
  for (const char* v : values) e.push_back(v);
  return {{"type", "string"}, {"enum", e}};
}

json vec2() {
  return {{"type", "array"}, {"items", number()}, {"minItems", 2}, {"maxItems", 2}};
}

json array_of(json items, int min_items = 0) {
  return {{"type", "array"}, {"items", std::move(items)}, {"minItems", min_items}};
}

json object(json properties) {
  return {{"type", "object"}, {"additionalProperties", false}, {"properties", std::move(properties)}};
}

json build_schema() {
  json s = object({
      {"kind", one_of({"spectrum", "berry", "curvature", "adiabatic", "hannay", "check"})},
      {"grid", object({{"nx", integer(8)}, {"ny", integer(8)}, {"h", number({}, 0.0)}})},
      {"flux", object({{"xi", number()}})},
      {"potential", object({{"type", one_of({"free", "gaussian", "circular", "harmonic", "tabulated"})},
                            {"depth", number({}, 0.0)},
                            {"sigma", number({}, 0.0)},
                            {"radius", number({}, 0.0)},
                            {"omega0", number({}, 0.0)},
                            {"file", {{"type", "string"}}}})},
      {"offset", vec2()},
      {"loop", object({{"shape", one_of({"rectangle", "circle", "polygon"})},
                       {"corner", vec2()},
                       {"widths", vec2()},
                       {"center", vec2()},
                       {"radius", number(0.0)},
                       {"vertices", array_of(vec2(), 2)},
                       {"orientation", {{"type", "integer"}, {"enum", {1, -1}}}},
                       {"samples", integer(4)},
                       {"repeat", integer(1)}})},
      {"solver", object({{"k", integer(1)},
                         {"tol", number({}, 0.0)},
                         {"max_iterations", integer(1)},
                         {"basis_size", integer(0)}})},
      {"berry", object({{"method", one_of({"translated", "resolved"})},
                        {"levels", array_of(integer(0), 1)}})},
      {"curvature", object({{"corner", vec2()},
                            {"plaquettes_x", integer(1)},
                            {"plaquettes_y", integer(1)},
                            {"delta", number(0.0)},
                            {"method", one_of({"translated", "resolved"})}})},
      {"adiabatic", object({{"Ts", array_of(number({}, 0.0), 1)},
                            {"steps", integer(0)},
                            {"ramp", one_of({"global", "per_edge"})},
                            {"inner_tol", number({}, 0.0)},
                            {"population_checkpoints", integer(0)},
                            {"symmetrize", {{"type", "boolean"}}}})},
      {"hannay", object({{"omega0", number(0.0)},
                         {"Ts", array_of(number({}, 0.0))},
                         {"ensemble_side", integer(8)},
                         {"action_plus", number({}, 0.0)},
                         {"action_minus", number({}, 0.0)},
                         {"max_phase_step", number({}, 0.0, 0.05)},
                         {"ramp", one_of({"global", "per_edge"})}})},
      {"output", {{"type", "string"}}},
      {"seed", integer(0)},
      {"workers", integer(0)},
  });
  s["title"] = "berrylab experiment";
  return s;
}

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "number") return v.is_number();
  if (type == "integer") return v.is_number_integer();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  return false;
}

void check_node(const json& v, const json& schema, const std::string& path) {
  const std::string where = path.empty() ? "<root>" : path;
  if (schema.contains("type") && !type_matches(v, schema["type"].get<std::string>()))
    throw ValidationError(where + ": expected " + schema["type"].get<std::string>() + ", got " +
                          v.type_name());
  if (schema.contains("enum")) {
    bool found = false;
    for (const auto& e : schema["enum"]) found = found || e == v;
    if (!found) throw ValidationError(where + ": " + v.dump() + " is not one of " + schema["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(where + ": not finite");
    if (schema.contains("minimum") && x < schema["minimum"].get<double>())
      throw ValidationError(where + ": must be >= " + schema["minimum"].dump());
    if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>())
      throw ValidationError(where + ": must be > " + schema["exclusiveMinimum"].dump());
    if (schema.contains("maximum") && x > schema["maximum"].get<double>())
      throw ValidationError(where + ": must be <= " + schema["maximum"].dump());
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
      throw ValidationError(where + ": needs at least " + schema["minItems"].dump() + " items");
    if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>())
      throw ValidationError(where + ": allows at most " + schema["maxItems"].dump() + " items");
    if (schema.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i)
        check_node(v[i], schema["items"], path + "[" + std::to_string(i) + "]");
  }
  if (v.is_object() && schema.contains("properties")) {
    const json& props = schema["properties"];
    for (auto it = v.begin(); it != v.end(); ++it) {
      const std::string child = path.empty() ? it.key() : path + "." + it.key();
      if (!props.contains(it.key())) {
        if (schema.value("additionalProperties", true) == false)
          throw ValidationError(child + ": unknown key");
        continue;
      }
      check_node(it.value(), props[it.key()], child);
    }
  }
}

// ---- parsing ----------------------------------------------------------------

Vec2 to_vec2(const json& j) { return Vec2(j[0].get<double>(), j[1].get<double>()); }
json from_vec2(const Vec2& v) { return json::array({v.x(), v.y()}); }

void only_keys(const json& obj, const std::string& section, const std::string& variant,
               std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok)
      throw ValidationError(section + "." + it.key() + ": not a parameter of " + section + " '" + variant + "'");
  }
}

TransportMethod parse_method(const std::string& s) {
  return s == "resolved" ? TransportMethod::resolved : TransportMethod::translated;
}

Ramp parse_ramp(const std::string& s) { return s == "global" ? Ramp::global : Ramp::per_edge; }

ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::spectrum, ExperimentKind::berry, ExperimentKind::curvature,
                 ExperimentKind::adiabatic, ExperimentKind::hannay, ExperimentKind::check})
    if (to_string(k) == s) return k;
  throw ValidationError("kind: unknown experiment kind '" + s + "'");
}

json potential_json(const ExperimentConfig& c) {
  return std::visit(
      [&](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, FreeSpace>) return {{"type", "free"}};
        if constexpr (std::is_same_v<T, GaussianWell>)
          return {{"type", "gaussian"}, {"depth", p.depth}, {"sigma", p.sigma}};
        if constexpr (std::is_same_v<T, CircularWell>)
          return {{"type", "circular"}, {"depth", p.depth}, {"radius", p.radius}};
        if constexpr (std::is_same_v<T, HarmonicWell>) return {{"type", "harmonic"}, {"omega0", p.omega0}};
        if constexpr (std::is_same_v<T, TabulatedPotential>)
          return {{"type", "tabulated"}, {"file", c.potential_file}};
      },
      c.potential);
}

json loop_json(const LoopSpec& loop) {
  json j = std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RectangleLoop>)
          return {{"shape", "rectangle"}, {"corner", from_vec2(s.corner)}, {"widths", from_vec2(s.widths)}};
        if constexpr (std::is_same_v<T, CircleLoop>)
          return {{"shape", "circle"}, {"center", from_vec2(s.center)}, {"radius", s.radius}};
        if constexpr (std::is_same_v<T, PolygonLoop>) {
          json v = json::array();
          for (const auto& p : s.vertices) v.push_back(from_vec2(p));
          return {{"shape", "polygon"}, {"vertices", v}};
        }
      },
      loop.shape);
  j["orientation"] = loop.orientation;
  j["samples"] = loop.samples;
  j["repeat"] = loop.repeat;
  return j;
}

json number_list(const std::vector<double>& v) { return json(v); }

}  // namespace

const json& config_schema() {
  static const json schema = build_schema();
  return schema;
}

void validate_against_schema(const json& doc, const json& schema) { check_node(doc, schema, ""); }

ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
  validate_against_schema(doc, config_schema());
  ExperimentConfig c;
  if (doc.contains("kind")) c.kind = parse_kind(doc["kind"]);
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    c.grid.nx = g.value("nx", c.grid.nx);
    c.grid.ny = g.value("ny", c.grid.ny);
    c.grid.h = g.value("h", c.grid.h);
  }
  if (doc.contains("flux")) c.flux.xi = doc["flux"].value("xi", c.flux.xi);
  if (doc.contains("potential")) {
    const json& p = doc["potential"];
    const std::string type = p.value("type", std::string("gaussian"));
    if (type == "free") {
      only_keys(p, "potential", type, {"type"});
      c.potential = FreeSpace{};
    } else if (type == "gaussian") {
      only_keys(p, "potential", type, {"type", "depth", "sigma"});
      GaussianWell w;
      w.depth = p.value("depth", w.depth);
      w.sigma = p.value("sigma", w.sigma);
      c.potential = w;
    } else if (type == "circular") {
      only_keys(p, "potential", type, {"type", "depth", "radius"});
      CircularWell w;
      w.depth = p.value("depth", w.depth);
      w.radius = p.value("radius", w.radius);
      c.potential = w;
    } else if (type == "harmonic") {
      only_keys(p, "potential", type, {"type", "omega0"});
      HarmonicWell w;
      w.omega0 = p.value("omega0", w.omega0);
      c.potential = w;
    } else {
      only_keys(p, "potential", type, {"type", "file"});
      if (!p.contains("file")) throw ValidationError("potential.file: required for a tabulated potential");
      c.potential_file = p["file"].get<std::string>();
      fs::path f(c.potential_file);
      if (f.is_relative() && !base_dir.empty()) f = base_dir / f;
      c.potential = load_tabulated_csv(f);
    }
  }
  if (doc.contains("offset")) c.offset = to_vec2(doc["offset"]);
  if (doc.contains("loop")) {
    const json& l = doc["loop"];
    const std::string shape = l.value("shape", std::string("rectangle"));
    if (shape == "rectangle") {
      only_keys(l, "loop", shape, {"shape", "corner", "widths", "orientation", "samples", "repeat"});
      RectangleLoop r;
      if (l.contains("corner")) r.corner = to_vec2(l["corner"]);
      if (l.contains("widths")) r.widths = to_vec2(l["widths"]);
      c.loop.shape = r;
    } else if (shape == "circle") {
      only_keys(l, "loop", shape, {"shape", "center", "radius", "orientation", "samples", "repeat"});
      CircleLoop r;
      if (l.contains("center")) r.center = to_vec2(l["center"]);
      r.radius = l.value("radius", r.radius);
      c.loop.shape = r;
    } else {
      only_keys(l, "loop", shape, {"shape", "vertices", "orientation", "samples", "repeat"});
      if (!l.contains("vertices")) throw ValidationError("loop.vertices: required for a polygon loop");
      PolygonLoop r;
      for (const auto& v : l["vertices"]) r.vertices.push_back(to_vec2(v));
      c.loop.shape = r;
    }
    c.loop.orientation = l.value("orientation", c.loop.orientation);
    c.loop.samples = l.value("samples", c.loop.samples);
    c.loop.repeat = l.value("repeat", c.loop.repeat);
  }
  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    c.solver.k = s.value("k", c.solver.k);
    c.solver.tol = s.value("tol", c.solver.tol);
    c.solver.max_iterations = s.value("max_iterations", c.solver.max_iterations);
    c.solver.basis_size = s.value("basis_size", c.solver.basis_size);
  }
  if (doc.contains("berry")) {
    const json& b = doc["berry"];
    if (b.contains("method")) c.berry.method = parse_method(b["method"]);
    if (b.contains("levels")) c.berry.levels = b["levels"].get<std::vector<int>>();
  }
  if (doc.contains("curvature")) {
    const json& b = doc["curvature"];
    auto& r = c.curvature.region;
    if (b.contains("corner")) r.corner = to_vec2(b["corner"]);
    r.plaquettes_x = b.value("plaquettes_x", r.plaquettes_x);
    r.plaquettes_y = b.value("plaquettes_y", r.plaquettes_y);
    r.delta = b.value("delta", r.delta);
    if (b.contains("method")) c.curvature.method = parse_method(b["method"]);
  }
  if (doc.contains("adiabatic")) {
    const json& a = doc["adiabatic"];
    auto& s = c.adiabatic;
    if (a.contains("Ts")) s.Ts = a["Ts"].get<std::vector<double>>();
    s.steps = a.value("steps", s.steps);
    if (a.contains("ramp")) s.ramp = parse_ramp(a["ramp"]);
    s.inner_tol = a.value("inner_tol", s.inner_tol);
    s.population_checkpoints = a.value("population_checkpoints", s.population_checkpoints);
    s.symmetrize = a.value("symmetrize", s.symmetrize);
  }
  if (doc.contains("hannay")) {
    const json& a = doc["hannay"];
    auto& s = c.hannay;
    s.omega0 = a.value("omega0", s.omega0);
    if (a.contains("Ts")) s.Ts = a["Ts"].get<std::vector<double>>();
    s.ensemble_side = a.value("ensemble_side", s.ensemble_side);
    s.action_plus = a.value("action_plus", s.action_plus);
    s.action_minus = a.value("action_minus", s.action_minus);
    s.max_phase_step = a.value("max_phase_step", s.max_phase_step);
    if (a.contains("ramp")) s.ramp = parse_ramp(a["ramp"]);
  }
  c.output = doc.value("output", c.output);
  if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
  c.solver.seed = c.seed;
  c.workers = doc.value("workers", c.workers);
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {
      {"kind", to_string(c.kind)},
      {"grid", {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"h", c.grid.h}}},
      {"flux", {{"xi", c.flux.xi}}},
      {"potential", potential_json(c)},
      {"offset", from_vec2(c.offset)},
      {"loop", loop_json(c.loop)},
      {"solver",
       {{"k", c.solver.k}, {"tol", c.solver.tol}, {"max_iterations", c.solver.max_iterations},
        {"basis_size", c.solver.basis_size}}},
      {"berry", {{"method", to_string(c.berry.method)}, {"levels", c.berry.levels}}},
      {"curvature",
       {{"corner", from_vec2(c.curvature.region.corner)},
        {"plaquettes_x", c.curvature.region.plaquettes_x},
        {"plaquettes_y", c.curvature.region.plaquettes_y},
        {"delta", c.curvature.region.delta},
        {"method", to_string(c.curvature.method)}}},
      {"adiabatic",
       {{"Ts", number_list(c.adiabatic.Ts)}, {"steps", c.adiabatic.steps},
        {"ramp", ramp_name(c.adiabatic.ramp)}, {"inner_tol", c.adiabatic.inner_tol},
        {"population_checkpoints", c.adiabatic.population_checkpoints},
        {"symmetrize", c.adiabatic.symmetrize}}},
      {"hannay",
       {{"omega0", c.hannay.omega0}, {"Ts", number_list(c.hannay.Ts)},
        {"ensemble_side", c.hannay.ensemble_side}, {"action_plus", c.hannay.action_plus},
        {"action_minus", c.hannay.action_minus}, {"max_phase_step", c.hannay.max_phase_step},
        {"ramp", ramp_name(c.hannay.ramp)}}},
      {"output", c.output},
      {"seed", c.seed},
      {"workers", c.workers},
  };
}

json default_config_json() { return to_json(ExperimentConfig{}); }

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("overrides"))
    throw ValidationError(path.string() + " is a sweep document; use the sweep command");
  return parse_config(doc, path.parent_path());
}

namespace {

std::vector<Vec2> curvature_corners(const CurvatureRegion& r, double h) {
  const double d = r.delta > 0.0 ? r.delta : 2.0 * h;
  std::vector<Vec2> pts;
  for (int j = 0; j <= r.plaquettes_y; ++j)
    for (int i = 0; i <= r.plaquettes_x; ++i) pts.push_back(r.corner + Vec2(i * d, j * d));
  return pts;
}

// Offsets the check suite visits besides the origin.
std::vector<Vec2> check_offsets(double h) {
  return {Vec2::Zero(), Vec2(2 * h, -h), Vec2(4 * h, -2 * h), Vec2(2 * h, h), Vec2(h, 4 * h),
          Vec2(-4 * h, -4 * h), Vec2(4 * h, 4 * h)};
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
  c.flux.validate();
  validate(c.potential);
  c.solver.validate();
  if (c.kind == ExperimentKind::hannay) {
    c.loop.validate();
    if (c.hannay.ensemble_side * c.hannay.ensemble_side < 64)
      throw ValidationError("hannay.ensemble_side: ensemble needs at least 64 members");
    ClassicalSystem{c.flux, c.hannay.omega0, Vec2::Zero()}.validate();
    return;
  }
  c.grid.validate();
  if (!c.offset.allFinite()) throw ValidationError("offset: not finite");
  std::vector<Vec2> centres;
  switch (c.kind) {
    case ExperimentKind::spectrum:
      centres.push_back(c.offset);
      break;
    case ExperimentKind::berry:
    case ExperimentKind::adiabatic:
      centres = open_points(c.loop);
      break;
    case ExperimentKind::curvature:
      centres = curvature_corners(c.curvature.region, c.grid.h);
      break;
    case ExperimentKind::check:
      centres = check_offsets(c.grid.h);
      break;
    case ExperimentKind::hannay:
      break;
  }
  for (int level : c.berry.levels)
    if (level < 0) throw ValidationError("berry.levels: levels must be >= 0");
  if (c.kind == ExperimentKind::adiabatic) {
    for (double T : c.adiabatic.Ts)
      if (!(T > 0.0)) throw ValidationError("adiabatic.Ts: durations must be positive");
    if (!std::is_sorted(c.adiabatic.Ts.begin(), c.adiabatic.Ts.end()))
      throw ValidationError("adiabatic.Ts: durations must be increasing");
  }
  check_containment(c.grid, c.flux, c.potential, centres);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_digest(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output");
  j.erase("workers");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(j.dump()));
  return buf;
}

json RunRecord::to_json() const {
  json s = json::object();
  for (const auto& [k, v] : summary) s[k] = v;
  json j = {{"kind", kind},       {"digest", digest},   {"version", version},
            {"wall_time", wall_time}, {"exit_code", exit_code}, {"payload", payload},
            {"warnings", warnings}, {"summary", s}};
  if (!error.empty()) j["error"] = error;
  return j;
}

namespace {

using Clock = std::chrono::steady_clock;

// Krylov basis for the nearly degenerate lowest Landau level of a free box.
constexpr int kClusterBasis = 40;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

EigenPair isolated_level(const ExperimentConfig& c, const Vec2& a, int level) {
  const HamiltonianOperator H(c.grid, c.flux, c.potential, Offset(a));
  SolverConfig cfg = c.solver;
  cfg.k = std::max(cfg.k, level + 2);
  auto pairs = lowest_eigenpairs(H, cfg);
  require_isolated(pairs, level, isolation_threshold(H, cfg));
  return pairs[level];
}

json phase_json(const PhaseResult& r, double analytic) {
  json samples = json::array();
  for (const auto& p : r.samples) samples.push_back(from_vec2(p));
  return {{"method", r.method},
          {"gamma_accumulated", r.gamma_accumulated},
          {"gamma_mod", r.gamma_mod},
          {"gamma_analytic", analytic},
          {"abs_error", std::abs(r.gamma_accumulated - analytic)},
          {"area", r.area},
          {"flux_quanta", r.flux_quanta},
          {"per_step_phases", r.per_step_phases},
          {"samples", samples}};
}

void run_spectrum(const ExperimentConfig& c, RunRecord& rec, int) {
  const HamiltonianOperator H(c.grid, c.flux, c.potential, Offset(c.offset));
  SolverConfig cfg = c.solver;
  if (std::holds_alternative<FreeSpace>(c.potential) && cfg.basis_size == 0) cfg.basis_size = kClusterBasis;
  const auto pairs = lowest_eigenpairs(H, cfg);
  json levels = json::array();
  rec.table.columns = {"level", "energy", "residual"};
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    levels.push_back({{"level", n}, {"energy", pairs[n].energy}, {"residual", pairs[n].residual}});
    rec.table.rows.push_back({static_cast<int>(n), pairs[n].energy, pairs[n].residual});
    rec.summary.emplace_back("E" + std::to_string(n), pairs[n].energy);
  }
  rec.payload["levels"] = levels;
  rec.payload["norm_estimate"] = H.norm_estimate();
  if (pairs.size() >= 2) rec.payload["gap"] = gap_check(pairs);
  if (std::holds_alternative<FreeSpace>(c.potential) && !c.flux.is_zero()) {
    rec.payload["landau_E0"] = c.flux.landau_level(0);
    rec.payload["landau_relative_error"] =
        std::abs(pairs[0].energy - c.flux.landau_level(0)) / c.flux.landau_level(0);
  }
  rec.log.push_back("solved " + std::to_string(pairs.size()) + " levels");
}

void run_berry(const ExperimentConfig& c, RunRecord& rec, int workers) {
  const double analytic = analytic_phase(c.flux, c.loop);
  std::vector<double> gammas;
  json results = json::array();
  const bool many = c.berry.levels.size() > 1;
  rec.table.columns = {"k", "a1", "a2", "step_phase", "cumulative_phase"};
  if (many) rec.table.columns.insert(rec.table.columns.begin(), "level");
  svg::LinePlot plot{"Wilson loop phase", "sample index k", "cumulative phase (rad)", {}, false};

  for (int level : c.berry.levels) {
    PhaseResult r;
    if (c.berry.method == TransportMethod::translated) {
      const EigenPair psi0 = isolated_level(c, Vec2::Zero(), level);
      r = berry_phase_translated(psi0, c.loop, c.flux, c.potential);
    } else {
      r = berry_phase_resolved(c.loop, c.flux, c.grid, c.potential, {c.solver, level, workers});
    }
    rec.log.push_back("level " + std::to_string(level) + ": gamma = " + fmt("%.12g", r.gamma_accumulated));
    json pj = phase_json(r, analytic);
    pj["level"] = level;
    results.push_back(pj);
    gammas.push_back(r.gamma_accumulated);

    svg::Series s{"level " + std::to_string(level), {}, {}, false};
    double cum = 0.0;
    s.x.push_back(0.0);
    s.y.push_back(0.0);
    for (std::size_t k = 0; k < r.per_step_phases.size(); ++k) {
      cum += r.per_step_phases[k];
      const Vec2& a = r.samples[k];
      std::vector<json> row = {static_cast<int>(k), a.x(), a.y(), r.per_step_phases[k], cum};
      if (many) row.insert(row.begin(), level);
      rec.table.rows.push_back(row);
      s.x.push_back(static_cast<double>(k + 1));
      s.y.push_back(cum);
    }
    plot.series.push_back(s);
  }
  rec.payload["levels"] = results;
  rec.payload["gamma_analytic"] = analytic;
  rec.summary = {{"xi", c.flux.xi},
                 {"area", oriented_area(c.loop)},
                 {"gamma_accumulated", gammas.front()},
                 {"gamma_mod", wrap_phase(gammas.front())},
                 {"gamma_analytic", analytic},
                 {"abs_error", std::abs(gammas.front() - analytic)}};
  if (many) {
    const double corr = correspondence_check(gammas);
    rec.payload["level_spread"] = corr;
    rec.summary.emplace_back("level_spread", corr);
  }
  rec.plots.push_back({"phase.svg", svg::render(plot)});
}

void run_curvature(const ExperimentConfig& c, RunRecord& rec, int workers) {
  CurvatureRegion region = c.curvature.region;
  if (region.delta == 0.0) region.delta = 2.0 * c.grid.h;
  Eigen::MatrixXd F;
  if (c.curvature.method == TransportMethod::translated) {
    const EigenPair psi0 = isolated_level(c, Vec2::Zero(), 0);
    F = curvature_map(psi0, region, c.flux);
  } else {
    F = curvature_map_resolved(region, c.flux, c.grid, c.potential, {c.solver, 0, workers});
  }
  const double expected = 2.0 * kPi * c.flux.xi;
  rec.table.columns = {"ix", "iy", "a1", "a2", "F", "F_minus_expected"};
  json rows = json::array();
  double worst = 0.0;
  for (Eigen::Index iy = 0; iy < F.rows(); ++iy) {
    json row = json::array();
    for (Eigen::Index ix = 0; ix < F.cols(); ++ix) {
      const Vec2 centre = region.corner + region.delta * Vec2(ix + 0.5, iy + 0.5);
      rec.table.rows.push_back({static_cast<int>(ix), static_cast<int>(iy), centre.x(), centre.y(),
                                F(iy, ix), F(iy, ix) - expected});
      worst = std::max(worst, std::abs(F(iy, ix) - expected));
      row.push_back(F(iy, ix));
    }
    rows.push_back(row);
  }
  rec.payload["F"] = rows;
  rec.payload["expected"] = expected;
  rec.payload["max_deviation"] = worst;
  rec.payload["delta"] = region.delta;
  rec.payload["method"] = to_string(c.curvature.method);
  rec.summary = {{"xi", c.flux.xi}, {"expected", expected}, {"max_deviation", worst}};
  rec.plots.push_back({"curvature.svg", svg::render_heat_strip(F, "Berry curvature per plaquette")});
}

void run_adiabatic(const ExperimentConfig& c, RunRecord& rec, int workers) {
  const Vec2 a0 = c.loop.points().front();
  const EigenPair start = isolated_level(c, a0, 0);

  PhaseResult reference;
  if (c.loop.commensurate(c.grid.h)) {
    const EigenPair psi0 = isolated_level(c, Vec2::Zero(), 0);
    reference = berry_phase_translated(psi0, c.loop, c.flux, c.potential);
  } else {
    reference = berry_phase_resolved(c.loop, c.flux, c.grid, c.potential, {c.solver, 0, workers});
  }
  const double gamma_ref = reference.gamma_accumulated;
  rec.log.push_back("wilson reference (" + reference.method + "): " + fmt("%.12g", gamma_ref));

  Schedule base;
  base.loop = c.loop;
  base.steps = c.adiabatic.steps;
  base.ramp = c.adiabatic.ramp;
  PropagationOptions opt;
  opt.inner_tol = c.adiabatic.inner_tol;
  opt.population_checkpoints = c.adiabatic.population_checkpoints;
  opt.solver = c.solver;
  opt.solver.k = std::max(opt.solver.k, 2);
  const auto rows =
      convergence_study(c.grid, c.flux, c.potential, start, base, c.adiabatic.Ts, gamma_ref, opt, workers);

  rec.table.columns = {"T", "gamma_adiabatic", "error", "min_population", "norm_drift"};
  json jrows = json::array();
  svg::Series err{"|gamma_ad - gamma_wilson|", {}, {}, true};
  for (const auto& r : rows) {
    rec.table.rows.push_back({r.T, r.gamma_adiabatic, r.error, r.min_population, r.norm_drift});
    jrows.push_back({{"T", r.T}, {"gamma_adiabatic", r.gamma_adiabatic}, {"error", r.error},
                     {"min_population", r.min_population}, {"norm_drift", r.norm_drift}});
    err.x.push_back(r.T);
    err.y.push_back(r.error);
    for (const auto& w : r.warnings) rec.warnings.push_back("T = " + fmt("%g", r.T) + ": " + w);
  }
  rec.payload["rows"] = jrows;
  rec.payload["gamma_wilson"] = gamma_ref;
  rec.payload["gamma_wilson_method"] = reference.method;
  rec.payload["gamma_analytic"] = analytic_phase(c.flux, c.loop);
  rec.summary = {{"T_max", rows.back().T}, {"error_at_T_max", rows.back().error},
                 {"norm_drift_max", 0.0}};
  for (const auto& r : rows) rec.summary[2].second = std::max(rec.summary[2].second, r.norm_drift);

  if (c.adiabatic.symmetrize) {
    Schedule rev = base;
    rev.loop.orientation = -c.loop.orientation;
    rev.T = c.adiabatic.Ts.back();
    const auto r = propagate(c.grid, c.flux, c.potential, start, rev, opt);
    const double sym = reversal_symmetrized_phase(rows.back().gamma_adiabatic, r.gamma_adiabatic);
    rec.payload["reversed_gamma_adiabatic"] = r.gamma_adiabatic;
    rec.payload["symmetrized_gamma"] = sym;
    rec.payload["symmetrized_error"] = std::abs(wrap_phase(sym - gamma_ref));
    rec.summary.emplace_back("symmetrized_error", std::abs(wrap_phase(sym - gamma_ref)));
  }
  rec.plots.push_back({"convergence.svg",
                       svg::render({"Adiabatic phase error", "T", "error (rad)", {err}, true})});
}

void run_hannay(const ExperimentConfig& c, RunRecord& rec, int workers) {
  const Vec2 a0 = c.loop.points().front();
  const ClassicalSystem sys{c.flux, c.hannay.omega0, a0};
  const FlowFrequencies f = flow_frequencies(sys);
  const Ensemble ens = make_ensemble(sys, c.hannay.action_plus, c.hannay.action_minus, c.hannay.ensemble_side);
  std::vector<double> Ts = c.hannay.Ts;
  if (Ts.empty()) Ts.push_back(1e4 / f.minus);
  HannayOptions opt{c.hannay.max_phase_step, c.hannay.ramp, workers};

  rec.table.columns = {"T", "delta_theta_plus", "delta_theta_minus", "steps", "action_drift"};
  json jrows = json::array();
  svg::Series sp{"|dtheta+|", {}, {}, true}, sm{"|dtheta-|", {}, {}, true};
  for (double T : Ts) {
    const HannayResult r = hannay_angle(sys, c.loop, T, ens, opt);
    rec.table.rows.push_back({T, r.delta_theta_plus, r.delta_theta_minus, r.steps, r.action_drift});
    jrows.push_back({{"T", T}, {"delta_theta_plus", r.delta_theta_plus},
                     {"delta_theta_minus", r.delta_theta_minus}, {"steps", r.steps},
                     {"action_drift", r.action_drift}});
    sp.x.push_back(T), sp.y.push_back(std::abs(r.delta_theta_plus));
    sm.x.push_back(T), sm.y.push_back(std::abs(r.delta_theta_minus));
  }
  rec.payload["omega_plus"] = f.plus;
  rec.payload["omega_minus"] = f.minus;
  rec.payload["one_period_symplectic_defect"] = symplectic_defect(flow_map(sys, 2.0 * kPi / f.minus));
  rec.payload["ensemble_size"] = ens.points.size();
  rec.payload["rows"] = jrows;
  const auto& last = rec.table.rows.back();
  rec.summary = {{"omega_plus", f.plus},
                 {"omega_minus", f.minus},
                 {"delta_theta_plus", last[1].get<double>()},
                 {"delta_theta_minus", last[2].get<double>()}};
  if (Ts.size() > 1)
    rec.plots.push_back({"hannay.svg", svg::render({"Hannay angle residual", "T", "|dtheta| (rad)", {sp, sm}, true})});
}

struct CheckItem {
  std::string name;
  double value;
  double threshold;
  bool pass;
};

std::vector<CheckItem> check_suite(const ExperimentConfig& c) {
  std::vector<CheckItem> items;
  auto add = [&](std::string name, double value, double threshold) {
    items.push_back({std::move(name), value, threshold, std::isfinite(value) && value <= threshold});
  };
  const double h = c.grid.h;
  const HamiltonianOperator H0(c.grid, c.flux, c.potential, Offset());

  double plaq = 0.0;
  for (int j = 0; j + 1 < c.grid.ny; ++j)
    for (int i = 0; i + 1 < c.grid.nx; ++i)
      plaq = std::max(plaq, std::abs(wrap_phase(H0.plaquette_phase(i, j) - 2.0 * kPi * c.flux.xi * h * h)));
  add("plaquette_flux", plaq, 1e-12);

  {
    const GridSpec small{12, 12, h};
    const Eigen::MatrixXcd D = HamiltonianOperator(small, c.flux, c.potential, Offset()).dense();
    add("hermiticity", (D - D.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  }

  std::vector<WaveFunction> probes = {localized_random_state(c.grid, Vec2::Zero(), 1.5, c.seed),
                                     localized_random_state(c.grid, Vec2(0.5, -0.5), 1.0, c.seed + 1)};
  add("intertwining", intertwining_residual(c.potential, c.grid, Offset(2 * h, -h), c.flux, probes), 1e-12);

  {
    const WaveFunction loc = localized_random_state(c.grid, Vec2::Zero(), 1.0, c.seed + 2);
    const Offset a(2 * h, h), b(h, 4 * h);
    const CocycleResult cr = cocycle_check(a, b, c.flux, loc);
    add("cocycle_deviation", cr.deviation, 1e-12);
    add("cocycle_phase", std::abs(wrap_phase(cr.phase - kPi * c.flux.xi * wedge(a.a, b.a))), 1e-10);
  }

  const auto p0 = lowest_eigenpairs(H0, c.solver);
  {
    const HamiltonianOperator Ha(c.grid, c.flux, c.potential, Offset(4 * h, -2 * h));
    const auto pa = lowest_eigenpairs(Ha, c.solver);
    add("translation_invariance", std::abs(pa[0].energy - p0[0].energy) / std::max(1e-300, std::abs(p0[0].energy)), 1e-6);
  }

  {
    LoopSpec small;
    small.shape = RectangleLoop{Vec2(-4 * h, -4 * h), Vec2(8 * h, 8 * h)};
    small.samples = 32;
    std::vector<WaveFunction> states;
    for (const auto& p : open_points(small)) states.push_back(translate(p0[0].state, Offset(p), c.flux));
    const double g = wilson_loop_phase(states, true).gamma_accumulated;
    std::mt19937_64 rng(c.seed + 3);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (auto& s : states) s.values *= std::polar(1.0, u(rng));
    const double g2 = wilson_product_phase(states);
    add("wilson_gauge_invariance", std::abs(wrap_phase(g2 - g)), 1e-12);
  }

  {
    const GridSpec small{24, 24, h};
    const HamiltonianOperator Hs(small, c.flux, c.potential, Offset());
    SolverConfig cfg = c.solver;
    cfg.k = 2;
    const auto kr = lowest_eigenpairs(Hs, cfg);
    const auto dr = dense_reference(Hs, false);
    double worst = 0.0;
    for (std::size_t n = 0; n < kr.size(); ++n) worst = std::max(worst, std::abs(kr[n].energy - dr[n].energy));
    add("krylov_vs_dense", worst, 1e-8);
  }

  if (!c.flux.is_zero()) {
    const HamiltonianOperator Hf(c.grid, c.flux, FreeSpace{}, Offset());
    SolverConfig cfg = c.solver;
    cfg.k = 1;
    cfg.basis_size = std::max(cfg.basis_size, kClusterBasis);
    const auto pf = lowest_eigenpairs(Hf, cfg);
    add("landau_level", std::abs(pf[0].energy - c.flux.landau_level(0)) / c.flux.landau_level(0), 1e-2);
  }
  return items;
}

void run_check(const ExperimentConfig& c, RunRecord& rec, int) {
  const auto items = check_suite(c);
  rec.table.columns = {"name", "value", "threshold", "pass"};
  json jitems = json::array();
  int passed = 0;
  for (const auto& it : items) {
    rec.table.rows.push_back({it.name, it.value, it.threshold, it.pass ? 1 : 0});
    jitems.push_back({{"name", it.name}, {"value", it.value}, {"threshold", it.threshold}, {"pass", it.pass}});
    passed += it.pass;
    rec.log.push_back(std::string(it.pass ? "PASS " : "FAIL ") + it.name + " = " + fmt("%.3e", it.value));
  }
  const int failed = static_cast<int>(items.size()) - passed;
  rec.payload["checks"] = jitems;
  rec.payload["passed"] = passed;
  rec.payload["failed"] = failed;
  rec.summary = {{"passed", passed}, {"failed", failed}};
  if (failed > 0) throw NumericalError(std::to_string(failed) + " invariant check(s) failed");
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  return 3;
}

RunRecord run(const ExperimentConfig& config) {
  const auto t0 = Clock::now();
  RunRecord rec;
  rec.kind = to_string(config.kind);
  try {
    rec.digest = config_digest(config);
    validate_config(config);
    const int workers = resolve_workers(config.workers);
    rec.log.push_back("kind " + rec.kind + ", digest " + rec.digest + ", workers " + std::to_string(workers));
    switch (config.kind) {
      case ExperimentKind::spectrum: run_spectrum(config, rec, workers); break;
      case ExperimentKind::berry: run_berry(config, rec, workers); break;
      case ExperimentKind::curvature: run_curvature(config, rec, workers); break;
      case ExperimentKind::adiabatic: run_adiabatic(config, rec, workers); break;
      case ExperimentKind::hannay: run_hannay(config, rec, workers); break;
      case ExperimentKind::check: run_check(config, rec, workers); break;
    }
  } catch (const std::exception& e) {
    rec.exit_code = exit_code_for(e);
    rec.error = e.what();
    rec.log.push_back(std::string(rec.exit_code == 2 ? "validation error: " : "numerical error: ") + e.what());
  }
  rec.wall_time = seconds_since(t0);
  rec.log.push_back("finished in " + fmt("%.3f", rec.wall_time) + " s, exit code " + std::to_string(rec.exit_code));
  return rec;
}

std::vector<RunRecord> sweep(const std::vector<ExperimentConfig>& configs, int workers) {
  return parallel_map(configs.size(), workers, [&](std::size_t i) { return run(configs[i]); });
}

std::vector<RunRecord> sweep(const std::vector<json>& entries, const fs::path& base_dir, int workers) {
  return parallel_map(entries.size(), workers, [&](std::size_t i) {
    ExperimentConfig cfg;
    try {
      cfg = parse_config(entries[i], base_dir);
    } catch (const std::exception& e) {
      RunRecord rec;
      rec.kind = entries[i].is_object() ? entries[i].value("kind", std::string("berry")) : "?";
      rec.exit_code = exit_code_for(e);
      rec.error = e.what();
      rec.log.push_back("invalid entry: " + rec.error);
      return rec;
    }
    return run(cfg);
  });
}

std::vector<json> expand_sweep(const json& doc) {
  if (!doc.is_object()) throw ValidationError("sweep document must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "base" && it.key() != "overrides" && it.key() != "output" && it.key() != "workers")
      throw ValidationError(it.key() + ": unknown key in sweep document");
  const json base = doc.value("base", json::object());
  if (!base.is_object()) throw ValidationError("base: expected object");
  if (!doc.contains("overrides") || !doc["overrides"].is_array())
    throw ValidationError("overrides: expected array");
  std::vector<json> out;
  for (std::size_t i = 0; i < doc["overrides"].size(); ++i) {
    const json& ov = doc["overrides"][i];
    if (!ov.is_object()) throw ValidationError("overrides[" + std::to_string(i) + "]: expected object");
    json entry = base;
    entry.merge_patch(ov);
    out.push_back(std::move(entry));
  }
  return out;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

std::string csv_cell(const json& v) {
  if (v.is_number_integer()) return v.dump();
  if (v.is_number()) return csv_number(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_null()) return "";
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + p.string());
  out << text;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

}  // namespace

std::string render_csv(const Table& table) {
  std::string s;
  for (std::size_t i = 0; i < table.columns.size(); ++i) s += (i ? "," : "") + csv_cell(table.columns[i]);
  s += "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + csv_cell(row[i]);
    s += "\n";
  }
  return s;
}

void write_outputs(const RunRecord& record, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "run.log", join_lines(record.log));
  if (!record.ok()) {
    const json err = {{"error",
                       {{"kind", record.exit_code == 2 ? "validation" : "numerical"},
                        {"exit_code", record.exit_code},
                        {"message", record.error},
                        {"experiment", record.kind},
                        {"digest", record.digest}}}};
    write_file(dir / "error.json", err.dump(2) + "\n");
    if (record.payload.empty()) return;
  }
  write_file(dir / "result.json", record.to_json().dump(2) + "\n");
  write_file(dir / "result.csv", render_csv(record.table));
  for (const auto& p : record.plots) write_file(dir / p.file, p.svg);
}

void write_sweep_outputs(const std::vector<RunRecord>& records, const fs::path& dir) {
  fs::create_directories(dir);
  Table t;
  t.columns = {"index", "kind", "exit_code", "digest"};
  for (const auto& r : records)
    for (const auto& [k, v] : r.summary)
      if (std::find(t.columns.begin(), t.columns.end(), k) == t.columns.end()) t.columns.push_back(k);
  t.columns.push_back("error");
  json entries = json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    char name[32];
    std::snprintf(name, sizeof name, "entry_%03zu", i);
    write_outputs(r, dir / name);
    std::vector<json> row = {static_cast<int>(i), r.kind, r.exit_code, r.digest};
    for (std::size_t c = 4; c + 1 < t.columns.size(); ++c) {
      json cell;
      for (const auto& [k, v] : r.summary)
        if (k == t.columns[c]) cell = v;
      row.push_back(cell);
    }
    row.push_back(r.error);
    t.rows.push_back(row);
    json e = r.to_json();
    e["index"] = i;
    e["directory"] = name;
    entries.push_back(e);
  }
  write_file(dir / "sweep.json", json{{"entries", entries}}.dump(2) + "\n");
  write_file(dir / "sweep.csv", render_csv(t));
}

}  // namespace berrylab
