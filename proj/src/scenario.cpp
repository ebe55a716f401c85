#include "beamopt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "beamopt/error.hpp"

#ifndef BEAMOPT_SCENARIO_DIR
#define BEAMOPT_SCENARIO_DIR "scenarios"
#endif

namespace beamopt {

using nlohmann::json;

namespace {

// Reads the keys of one JSON object and rejects the ones nobody asked for,
// so a misspelled key fails loudly instead of silently using a default.
class Section {
 public:
  Section(const json& node, std::string where) : node_(node), where_(std::move(where)) {
    if (!node_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const char* key) const { return node_.contains(key); }

  template <typename T>
  void get(const char* key, T& out) {
    if (!node_.contains(key)) return;
    seen_.insert(key);
    const json& v = node_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(name(key) + ": expected true/false");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError(name(key) + ": expected a non-negative integer");
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(name(key) + ": expected a number");
      out = v.get<T>();
    } else {
      if (!v.is_string()) throw ConfigError(name(key) + ": expected a string");
      out = v.get<std::string>();
    }
  }

  template <typename T>
  void require(const char* key, T& out) {
    if (!node_.contains(key)) throw ConfigError(name(key) + ": missing");
    get(key, out);
  }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(node_.at(key), name(key));
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return node_.at(key);
  }

  void finish() const {
    for (const auto& item : node_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(name(item.key()) + ": unknown key");
    }
  }

  std::string name(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

 private:
  const json& node_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_pair(Section& s, const char* key, double& lo, double& hi) {
  if (!s.has(key)) return;
  const json& v = s.raw(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(s.name(key) + ": expected [min, max]");
  }
  lo = v[0].get<double>();
  hi = v[1].get<double>();
}

PathSpec parse_path(Section s) {
  PathSpec p;
  if (s.has("generator")) {
    s.get("generator", p.generator);
  } else if (s.has("segments")) {
    p.generator = "segments";
  } else {
    throw ConfigError(s.name("generator") + ": missing");
  }
  if (p.generator == "snake") {
    s.require("lines", p.lines);
    s.require("line_length_mm", p.line_length_mm);
    s.require("line_offset_mm", p.line_offset_mm);
    s.require("segments_per_line", p.segments_per_line);
  } else if (p.generator == "annulus_quadrant") {
    s.require("r_inner_mm", p.r_inner_mm);
    s.require("r_outer_mm", p.r_outer_mm);
    s.require("n_lines", p.n_lines);
    s.require("delta_angle_deg", p.delta_angle_deg);
    s.require("segments_per_line", p.segments_per_line);
    s.get("inward", p.inward);
  } else if (p.generator == "segments") {
    const json& list = s.raw("segments");
    if (!list.is_array() || list.empty()) throw ConfigError(s.name("segments") + ": expected a nonempty list");
    for (const auto& seg : list) {
      const bool ok = seg.is_array() && seg.size() == 2 && seg[0].is_array() && seg[0].size() == 2 &&
                      seg[1].is_array() && seg[1].size() == 2 && seg[0][0].is_number() && seg[0][1].is_number() &&
                      seg[1][0].is_number() && seg[1][1].is_number();
      if (!ok) throw ConfigError(s.name("segments") + ": each segment must be [[x_i, y_i], [x_f, y_f]]");
      p.segments_mm.push_back({seg[0][0].get<double>(), seg[0][1].get<double>(), seg[1][0].get<double>(),
                               seg[1][1].get<double>()});
    }
  } else if (p.generator == "file") {
    s.require("file", p.file);
  } else {
    throw ConfigError(s.name("generator") + ": unknown generator '" + p.generator + "'");
  }
  s.finish();
  return p;
}

json dump_path(const PathSpec& p) {
  json j;
  j["generator"] = p.generator;
  if (p.generator == "snake") {
    j["lines"] = p.lines;
    j["line_length_mm"] = p.line_length_mm;
    j["line_offset_mm"] = p.line_offset_mm;
    j["segments_per_line"] = p.segments_per_line;
  } else if (p.generator == "annulus_quadrant") {
    j["r_inner_mm"] = p.r_inner_mm;
    j["r_outer_mm"] = p.r_outer_mm;
    j["n_lines"] = p.n_lines;
    j["delta_angle_deg"] = p.delta_angle_deg;
    j["segments_per_line"] = p.segments_per_line;
    j["inward"] = p.inward;
  } else if (p.generator == "segments") {
    json list = json::array();
    for (const auto& s : p.segments_mm) list.push_back({{s[0], s[1]}, {s[2], s[3]}});
    j["segments"] = list;
  } else {
    j["file"] = p.file;
  }
  return j;
}

std::vector<SegmentEndpoints> generate(const PathSpec& p, const std::filesystem::path& base) {
  if (p.generator == "snake") {
    if (p.lines == 0 || p.segments_per_line == 0) throw ConfigError("snake: lines and segments_per_line must be >= 1");
    return generators::snake(p.lines, p.line_length_mm / 1e3, p.line_offset_mm / 1e3, p.segments_per_line);
  }
  if (p.generator == "annulus_quadrant") {
    if (p.n_lines == 0 || p.segments_per_line == 0) {
      throw ConfigError("annulus_quadrant: n_lines and segments_per_line must be >= 1");
    }
    return generators::annulus_quadrant(p.r_inner_mm / 1e3, p.r_outer_mm / 1e3, p.n_lines,
                                        p.delta_angle_deg * std::numbers::pi / 180.0, p.segments_per_line, p.inward);
  }
  if (p.generator == "segments") {
    std::vector<SegmentEndpoints> e;
    for (const auto& s : p.segments_mm) e.push_back({{s[0] / 1e3, s[1] / 1e3, 0.0}, {s[2] / 1e3, s[3] / 1e3, 0.0}});
    return e;
  }
  const std::filesystem::path file = std::filesystem::path(p.file).is_absolute() ? std::filesystem::path(p.file) : base / p.file;
  return load_path_file(file);
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

void check_grid(double lo, double hi, double step, const std::string& what) {
  if (!(hi >= lo) || !(step > 0.0)) throw ConfigError(what + ": need min <= max and step > 0");
}

void validate(const Scenario& sc) {
  const auto& a = sc.algorithm;
  if (a.kind != "segmentwise" && a.kind != "linewise") throw ConfigError("algorithm.kind: unknown '" + a.kind + "'");
  if (a.window == 0 || a.freeze == 0 || a.freeze > a.window) {
    throw ConfigError("algorithm: need 1 <= freeze <= window");
  }
  extend_rule(sc);
  solver_options(sc).validate();
  coefficient_bounds(sc).validate();
  const Problem problem = make_problem(sc);
  if (a.optimize_lines > problem.path->num_lines()) throw ConfigError("algorithm.optimize_lines exceeds the line count");
  problem.bounds.check(initial_beam(sc, problem.path->num_segments()));
  if (a.kind == "linewise" && !(a.c3_init >= 0.0 && a.c3_init <= a.c3_max)) {
    throw ConfigError("algorithm.c3_init must lie in [0, c3_max]");
  }
  const auto& g = sc.outputs.surface_grid;
  if (g.enabled) {
    check_grid(g.x_min_mm, g.x_max_mm, g.step_mm, "outputs.surface_grid");
    check_grid(g.y_min_mm, g.y_max_mm, g.step_mm, "outputs.surface_grid");
  }
  const auto& c = sc.outputs.cross_section;
  if (c.enabled) {
    check_grid(c.y_min_mm, c.y_max_mm, c.step_mm, "outputs.cross_section");
    check_grid(c.z_min_mm, c.z_max_mm, c.step_mm, "outputs.cross_section");
    if (c.z_max_mm > 0.0) throw ConfigError("outputs.cross_section: z must be <= 0");
  }
}

}  // namespace

bool Scenario::operator==(const Scenario& o) const {
  return name == o.name && conductivity_W_mK == o.conductivity_W_mK && diffusivity_mm2_s == o.diffusivity_mm2_s &&
         initial_temperature_K == o.initial_temperature_K && power_W == o.power_W && path == o.path &&
         jump_dwell_s == o.jump_dwell_s && melt_temperature_K == o.melt_temperature_K &&
         surface_temperature_K == o.surface_temperature_K && weight_secondary == o.weight_secondary &&
         weight_surface == o.weight_surface && margin_mm == o.margin_mm && sample_spacing_mm == o.sample_spacing_mm &&
         secondary_width_mm == o.secondary_width_mm && secondary_depth_mm == o.secondary_depth_mm &&
         secondary_mode == o.secondary_mode && smoothing_per_K == o.smoothing_per_K &&
         time_advance_mm == o.time_advance_mm && spot_min_mm == o.spot_min_mm && spot_max_mm == o.spot_max_mm &&
         speed_min_mm_s == o.speed_min_mm_s && speed_max_mm_s == o.speed_max_mm_s && algorithm == o.algorithm &&
         outputs == o.outputs && output_directory == o.output_directory;
}

Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_directory) {
  const json root = parse_json(json_text, "scenario");
  Scenario sc;
  sc.base_directory = base_directory;
  Section s(root, "");
  s.get("name", sc.name);
  if (s.has("material")) {
    Section m = s.child("material");
    m.get("conductivity_W_mK", sc.conductivity_W_mK);
    m.get("diffusivity_mm2_s", sc.diffusivity_mm2_s);
    m.get("initial_temperature_K", sc.initial_temperature_K);
    m.get("power_W", sc.power_W);
    m.finish();
  }
  if (!s.has("path")) throw ConfigError("path: missing");
  sc.path = parse_path(s.child("path"));
  s.get("jump_dwell_s", sc.jump_dwell_s);
  if (s.has("objective")) {
    Section o = s.child("objective");
    o.get("melt_temperature_K", sc.melt_temperature_K);
    o.get("surface_temperature_K", sc.surface_temperature_K);
    o.get("weight_secondary", sc.weight_secondary);
    o.get("weight_surface", sc.weight_surface);
    o.get("margin_mm", sc.margin_mm);
    o.get("sample_spacing_mm", sc.sample_spacing_mm);
    o.get("smoothing_per_K", sc.smoothing_per_K);
    o.get("time_advance_mm", sc.time_advance_mm);
    if (o.has("secondary")) {
      Section w = o.child("secondary");
      w.get("mode", sc.secondary_mode);
      w.get("width_mm", sc.secondary_width_mm);
      w.get("depth_mm", sc.secondary_depth_mm);
      w.finish();
    }
    o.finish();
  }
  if (s.has("bounds")) {
    Section b = s.child("bounds");
    read_pair(b, "spot_mm", sc.spot_min_mm, sc.spot_max_mm);
    read_pair(b, "speed_mm_s", sc.speed_min_mm_s, sc.speed_max_mm_s);
    b.finish();
  }
  if (s.has("algorithm")) {
    Section a = s.child("algorithm");
    auto& al = sc.algorithm;
    a.get("kind", al.kind);
    a.get("window", al.window);
    a.get("freeze", al.freeze);
    a.get("optimize_lines", al.optimize_lines);
    a.get("extend", al.extend);
    a.get("initial_spot_mm", al.initial_spot_mm);
    a.get("initial_speed_mm_s", al.initial_speed_mm_s);
    a.get("c2_max", al.c2_max);
    a.get("c3_max_per_m", al.c3_max);
    a.get("c3_init_per_m", al.c3_init);
    a.get("c4_min", al.c4_min);
    a.get("c4_max", al.c4_max);
    a.get("max_iterations", al.max_iterations);
    a.get("objective_tolerance", al.objective_tolerance);
    a.get("gradient_tolerance", al.gradient_tolerance);
    a.get("fd_step", al.fd_step);
    a.get("history", al.history);
    a.finish();
  }
  if (s.has("outputs")) {
    Section o = s.child("outputs");
    o.get("profiles", sc.outputs.profiles);
    if (o.has("surface_grid")) {
      Section g = o.child("surface_grid");
      auto& sg = sc.outputs.surface_grid;
      sg.enabled = true;
      read_pair(g, "x_mm", sg.x_min_mm, sg.x_max_mm);
      read_pair(g, "y_mm", sg.y_min_mm, sg.y_max_mm);
      g.require("step_mm", sg.step_mm);
      g.finish();
    }
    if (o.has("cross_section")) {
      Section c = o.child("cross_section");
      auto& cs = sc.outputs.cross_section;
      cs.enabled = true;
      c.require("x_mm", cs.x_mm);
      read_pair(c, "y_mm", cs.y_min_mm, cs.y_max_mm);
      read_pair(c, "z_mm", cs.z_min_mm, cs.z_max_mm);
      c.require("step_mm", cs.step_mm);
      c.finish();
    }
    o.finish();
  }
  s.get("output_directory", sc.output_directory);
  s.finish();
  validate(sc);
  return sc;
}

std::string dump_scenario(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["material"] = {{"conductivity_W_mK", sc.conductivity_W_mK},
                   {"diffusivity_mm2_s", sc.diffusivity_mm2_s},
                   {"initial_temperature_K", sc.initial_temperature_K},
                   {"power_W", sc.power_W}};
  j["path"] = dump_path(sc.path);
  j["jump_dwell_s"] = sc.jump_dwell_s;
  j["objective"] = {{"melt_temperature_K", sc.melt_temperature_K},
                    {"surface_temperature_K", sc.surface_temperature_K},
                    {"weight_secondary", sc.weight_secondary},
                    {"weight_surface", sc.weight_surface},
                    {"margin_mm", sc.margin_mm},
                    {"sample_spacing_mm", sc.sample_spacing_mm},
                    {"smoothing_per_K", sc.smoothing_per_K},
                    {"time_advance_mm", sc.time_advance_mm},
                    {"secondary",
                     {{"mode", sc.secondary_mode},
                      {"width_mm", sc.secondary_width_mm},
                      {"depth_mm", sc.secondary_depth_mm}}}};
  j["bounds"] = {{"spot_mm", {sc.spot_min_mm, sc.spot_max_mm}}, {"speed_mm_s", {sc.speed_min_mm_s, sc.speed_max_mm_s}}};
  const auto& a = sc.algorithm;
  j["algorithm"] = {{"kind", a.kind},
                    {"window", a.window},
                    {"freeze", a.freeze},
                    {"optimize_lines", a.optimize_lines},
                    {"extend", a.extend},
                    {"initial_spot_mm", a.initial_spot_mm},
                    {"initial_speed_mm_s", a.initial_speed_mm_s},
                    {"c2_max", a.c2_max},
                    {"c3_max_per_m", a.c3_max},
                    {"c3_init_per_m", a.c3_init},
                    {"c4_min", a.c4_min},
                    {"c4_max", a.c4_max},
                    {"max_iterations", a.max_iterations},
                    {"objective_tolerance", a.objective_tolerance},
                    {"gradient_tolerance", a.gradient_tolerance},
                    {"fd_step", a.fd_step},
                    {"history", a.history}};
  json out;
  out["profiles"] = sc.outputs.profiles;
  if (const auto& g = sc.outputs.surface_grid; g.enabled) {
    out["surface_grid"] = {
        {"x_mm", {g.x_min_mm, g.x_max_mm}}, {"y_mm", {g.y_min_mm, g.y_max_mm}}, {"step_mm", g.step_mm}};
  }
  if (const auto& c = sc.outputs.cross_section; c.enabled) {
    out["cross_section"] = {{"x_mm", c.x_mm},
                            {"y_mm", {c.y_min_mm, c.y_max_mm}},
                            {"z_mm", {c.z_min_mm, c.z_max_mm}},
                            {"step_mm", c.step_mm}};
  }
  j["outputs"] = out;
  j["output_directory"] = sc.output_directory;
  return j.dump(2) + "\n";
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << dump_scenario(scenario);
}

std::filesystem::path builtin_scenario_directory() {
  if (const char* env = std::getenv("BEAMOPT_SCENARIO_DIR"); env && *env) return env;
  return BEAMOPT_SCENARIO_DIR;
}

std::vector<std::string> builtin_scenarios() {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(builtin_scenario_directory(), ec)) {
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

Scenario load_scenario(const std::string& file_or_builtin) {
  std::filesystem::path file = file_or_builtin;
  if (!std::filesystem::exists(file)) {
    const auto builtin = builtin_scenario_directory() / (file_or_builtin + ".json");
    if (file_or_builtin.find('/') != std::string::npos || !std::filesystem::exists(builtin)) {
      throw ConfigError("scenario not found: " + file_or_builtin);
    }
    file = builtin;
  }
  return parse_scenario(read_text(file), file.parent_path());
}

std::vector<SegmentEndpoints> load_path_file(const std::filesystem::path& file) {
  const json root = parse_json(read_text(file), file.string());
  PathSpec spec = parse_path(Section(root, file.string()));
  if (spec.generator == "file") throw ConfigError(file.string() + ": path files cannot reference other files");
  return generate(spec, file.parent_path());
}

std::vector<SegmentEndpoints> build_endpoints(const Scenario& scenario) {
  return generate(scenario.path, scenario.base_directory);
}

Problem make_problem(const Scenario& sc, unsigned threads) {
  Problem p;
  p.path = std::make_shared<const ScanPath>(build_endpoints(sc));
  p.material.conductivity = sc.conductivity_W_mK;
  p.material.diffusivity = sc.diffusivity_mm2_s / 1e6;
  p.material.initial_temperature = sc.initial_temperature_K;
  p.material.power = sc.power_W;
  auto& o = p.objective;
  o.melt_temperature = sc.melt_temperature_K;
  o.surface_temperature = sc.surface_temperature_K;
  o.weight_secondary = sc.weight_secondary;
  o.weight_surface = sc.weight_surface;
  o.margin = sc.margin_mm / 1e3;
  o.sample_spacing = sc.sample_spacing_mm / 1e3;
  o.smoothing = sc.smoothing_per_K;
  o.time_advance = sc.time_advance_mm / 1e3;
  o.secondary.width = sc.secondary_width_mm / 1e3;
  o.secondary.depth = sc.secondary_depth_mm / 1e3;
  if (sc.secondary_mode == "global_offset") {
    o.secondary.mode = OffsetMode::global_offset;
  } else if (sc.secondary_mode == "normal_offset") {
    o.secondary.mode = OffsetMode::normal_offset;
  } else {
    throw ConfigError("objective.secondary.mode: unknown '" + sc.secondary_mode + "'");
  }
  p.bounds = {sc.spot_min_mm / 1e3, sc.spot_max_mm / 1e3, sc.speed_min_mm_s / 1e3, sc.speed_max_mm_s / 1e3};
  p.jump_dwell = sc.jump_dwell_s;
  p.threads = threads;
  p.validate();
  return p;
}

SolverOptions solver_options(const Scenario& sc) {
  SolverOptions s;
  s.max_iterations = sc.algorithm.max_iterations;
  s.objective_tolerance = sc.algorithm.objective_tolerance;
  s.gradient_tolerance = sc.algorithm.gradient_tolerance;
  s.fd_step = sc.algorithm.fd_step;
  s.history = sc.algorithm.history;
  return s;
}

CoefficientBounds coefficient_bounds(const Scenario& sc) {
  return {sc.algorithm.c2_max, sc.algorithm.c3_max, sc.algorithm.c4_min, sc.algorithm.c4_max};
}

ExtendRule extend_rule(const Scenario& sc) {
  if (sc.algorithm.extend == "by_index") return ExtendRule::by_index;
  if (sc.algorithm.extend == "by_fraction") return ExtendRule::by_fraction;
  throw ConfigError("algorithm.extend: unknown '" + sc.algorithm.extend + "'");
}

BeamParameters initial_beam(const Scenario& sc, std::size_t num_segments) {
  return BeamParameters::uniform(num_segments, sc.algorithm.initial_spot_mm / 1e3,
                                 sc.algorithm.initial_speed_mm_s / 1e3);
}

void write_decision_table(const std::filesystem::path& file, const ScanPath& path, const BeamParameters& beam) {
  beam.validate(path.num_segments());
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << "k,gamma_i_mm,sigma_mm,v_mm_s\n";
  char row[160];
  for (std::size_t k = 0; k < path.num_segments(); ++k) {
    std::snprintf(row, sizeof row, "%zu,%.17g,%.17g,%.17g\n", k + 1, path.start_distance(k) * 1e3,
                  beam.spot_size[k] * 1e3, beam.speed[k] * 1e3);
    out << row;
  }
}

BeamParameters read_decision_table(const std::filesystem::path& file, std::size_t num_segments) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("k,gamma_i_mm,sigma_mm,v_mm_s", 0) != 0) {
    throw ConfigError(file.string() + ": expected header k,gamma_i_mm,sigma_mm,v_mm_s");
  }
  BeamParameters beam;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell[4];
    for (auto& c : cell) std::getline(ss, c, ',');
    try {
      const std::size_t k = std::stoul(cell[0]);
      if (k != beam.spot_size.size() + 1) throw ConfigError("");
      std::stod(cell[1]);
      beam.spot_size.push_back(std::stod(cell[2]) / 1e3);
      beam.speed.push_back(std::stod(cell[3]) / 1e3);
    } catch (const std::exception&) {
      throw ConfigError(file.string() + ": malformed row " + std::to_string(row));
    }
  }
  if (beam.spot_size.size() != num_segments) {
    throw ConfigError(file.string() + ": " + std::to_string(beam.spot_size.size()) + " rows for a path of " +
                      std::to_string(num_segments) + " segments");
  }
  beam.validate(num_segments);
  return beam;
}

}  // namespace beamopt
