#pragma once

// Scenario files: the run configuration as written on disk. Lengths are in
// millimetres and speeds in mm/s; values stay in file units here and are
// converted to SI once, when the Problem is built, so load -> save -> load
// is exact.

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "beamopt/optimize.hpp"

namespace beamopt {

// A path given by explicit segments, a named generator or a separate path
// file (resolved relative to the scenario file).
struct PathSpec {
  std::string generator;  // "segments", "snake", "annulus_quadrant" or "file"

  // snake
  std::size_t lines = 0;
  double line_length_mm = 0.0;
  double line_offset_mm = 0.0;
  std::size_t segments_per_line = 0;

  // annulus_quadrant
  double r_inner_mm = 0.0;
  double r_outer_mm = 0.0;
  std::size_t n_lines = 0;
  double delta_angle_deg = 0.0;
  bool inward = true;

  // segments: [[x_i, y_i], [x_f, y_f]] in mm
  std::vector<std::array<double, 4>> segments_mm;

  // file
  std::string file;

  bool operator==(const PathSpec&) const = default;
};

struct SurfaceGridSpec {
  bool enabled = false;
  double x_min_mm = 0.0, x_max_mm = 0.0;
  double y_min_mm = 0.0, y_max_mm = 0.0;
  double step_mm = 0.0;

  bool operator==(const SurfaceGridSpec&) const = default;
};

// Vertical plane x = x_mm.
struct CrossSectionSpec {
  bool enabled = false;
  double x_mm = 0.0;
  double y_min_mm = 0.0, y_max_mm = 0.0;
  double z_min_mm = 0.0, z_max_mm = 0.0;
  double step_mm = 0.0;

  bool operator==(const CrossSectionSpec&) const = default;
};

struct OutputSpec {
  SurfaceGridSpec surface_grid;
  CrossSectionSpec cross_section;
  bool profiles = true;

  bool operator==(const OutputSpec&) const = default;
};

struct AlgorithmSpec {
  std::string kind = "segmentwise";  // or "linewise"
  std::size_t window = 5;            // segments (segment-wise) or lines (line-wise)
  std::size_t freeze = 1;
  std::size_t optimize_lines = 0;    // optimize the first n lines only; 0 = all
  std::string extend = "by_fraction";  // or "by_index"
  double initial_spot_mm = 0.2;
  double initial_speed_mm_s = 500.0;

  // Line-wise coefficient bounds and start; C3 acts on gamma in metres.
  double c2_max = 20.0;
  double c3_max = 1e7;
  double c3_init = 5e6;
  double c4_min = 0.5;
  double c4_max = 4.0;

  unsigned max_iterations = 50;
  double objective_tolerance = 1e-3;
  double gradient_tolerance = 1e-10;
  double fd_step = 1e-6;
  unsigned history = 10;

  bool operator==(const AlgorithmSpec&) const = default;
};

struct Scenario {
  std::string name;

  // material
  double conductivity_W_mK = 20.0;
  double diffusivity_mm2_s = 8.45;
  double initial_temperature_K = 1000.0;
  double power_W = 100.0;

  PathSpec path;
  double jump_dwell_s = 0.0;

  // objective
  double melt_temperature_K = 1800.0;
  double surface_temperature_K = 2800.0;
  double weight_secondary = 0.7;
  double weight_surface = 0.3;
  double margin_mm = 0.4;
  double sample_spacing_mm = 0.05;
  double secondary_width_mm = 0.1;
  double secondary_depth_mm = 0.05;
  std::string secondary_mode = "global_offset";  // or "normal_offset"
  double smoothing_per_K = 0.1;
  double time_advance_mm = 0.05;

  // bounds
  double spot_min_mm = 0.01;
  double spot_max_mm = 1.0;
  double speed_min_mm_s = 10.0;
  double speed_max_mm_s = 1e4;

  AlgorithmSpec algorithm;
  OutputSpec outputs;
  std::string output_directory = "out";

  // Directory the scenario was read from; relative path files resolve
  // against it. Not serialized.
  std::filesystem::path base_directory;

  bool operator==(const Scenario& other) const;
};

// Reads a scenario file, or a built-in scenario by name ("example1", ...).
// Unknown keys, missing files and invalid values throw ConfigError.
Scenario load_scenario(const std::string& file_or_builtin);
Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_directory = {});
std::string dump_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& file);

// Directory searched for built-in scenarios: $BEAMOPT_SCENARIO_DIR if set,
// else the one recorded at build time.
std::filesystem::path builtin_scenario_directory();
std::vector<std::string> builtin_scenarios();

// Path-definition file: {"segments": [[[x_i, y_i], [x_f, y_f]], ...]} or a
// generator object, lengths in mm.
std::vector<SegmentEndpoints> load_path_file(const std::filesystem::path& file);

std::vector<SegmentEndpoints> build_endpoints(const Scenario& scenario);

// SI problem for the full path (threads caps worker parallelism).
Problem make_problem(const Scenario& scenario, unsigned threads = 1);
SolverOptions solver_options(const Scenario& scenario);
CoefficientBounds coefficient_bounds(const Scenario& scenario);
ExtendRule extend_rule(const Scenario& scenario);
BeamParameters initial_beam(const Scenario& scenario, std::size_t num_segments);

// Per-segment decision table CSV: k,gamma_i_mm,sigma_mm,v_mm_s (k 1-based).
void write_decision_table(const std::filesystem::path& file, const ScanPath& path, const BeamParameters& beam);
// Throws ConfigError when the row count differs from num_segments.
BeamParameters read_decision_table(const std::filesystem::path& file, std::size_t num_segments);

}  // namespace beamopt
