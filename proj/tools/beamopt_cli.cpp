// beamopt command-line front end: simulate, optimize and evaluate a scenario.
//
// Exit status: 0 success, 2 configuration error, 3 solver abort.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "beamopt/error.hpp"
#include "beamopt/optimize.hpp"
#include "beamopt/parallel.hpp"
#include "beamopt/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace beamopt;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct CommonOptions {
  std::string scenario;
  std::string out;
  unsigned threads = 1;
  bool seedless = true;  // every run is deterministic; kept for interface stability
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--scenario", o.scenario, "Scenario file or built-in name (example1, example2, example3)")
      ->required();
  cmd->add_option("--out", o.out, "Output directory (default: the scenario's output_directory)");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--seedless", o.seedless, "Deterministic mode (default; no random state is used)");
}

fs::path output_dir(const CommonOptions& o, const Scenario& sc) {
  const fs::path dir = o.out.empty() ? fs::path(sc.output_directory) : fs::path(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write " + file.string());
  return out;
}

json report_json(const ObjectiveReport& r) {
  json lines = json::array();
  for (const auto& l : r.per_line) lines.push_back({{"line", l.line + 1}, {"g1", l.g1}, {"g2", l.g2}});
  return {{"J", r.J},
          {"f1", r.f1},
          {"f2", r.f2},
          {"units", "K^2 m"},
          {"per_line", lines},
          {"sampling", {{"h_mm", r.sample_spacing * 1e3}, {"n_samples", r.num_samples}}}};
}

void write_json(const fs::path& file, const json& j) { open_out(file) << j.dump(2) << "\n"; }

void write_grid_csv(const fs::path& file, const std::vector<Point3>& grid, const std::vector<double>& values) {
  auto out = open_out(file);
  out << "x_mm,y_mm,z_mm,value_K\n";
  char row[128];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::snprintf(row, sizeof row, "%.6f,%.6f,%.6f,%.6f\n", grid[i].x * 1e3, grid[i].y * 1e3, grid[i].z * 1e3,
                  values[i]);
    out << row;
  }
}

std::vector<double> axis(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) v.push_back((lo + static_cast<double>(i) * step) * 1e-3);
  return v;
}

std::vector<double> max_field(const ThermalModel& model, const std::vector<Point3>& grid, unsigned threads,
                              const MaxSampling& sampling) {
  std::vector<double> values(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    values[i] = field_on_grid(model, std::span<const Point3>(&grid[i], 1), {}, sampling)[0];
  });
  return values;
}

void write_profiles(const fs::path& dir, const Problem& problem, const ObjectiveReport& report) {
  const auto sampling = problem.make_sampling();
  auto beam = open_out(dir / "profile_beam.csv");
  auto secondary = open_out(dir / "profile_secondary.csv");
  beam << "gamma_mm,M_K,alpha\n";
  secondary << "gamma_mm,M_K,alpha\n";
  char row[96];
  for (std::size_t i = 0; i < sampling->samples().size(); ++i) {
    const auto& s = sampling->samples()[i];
    std::snprintf(row, sizeof row, "%.6f,%.6f,%d\n", s.gamma * 1e3, report.maxima[i].beam, s.alpha);
    beam << row;
    std::snprintf(row, sizeof row, "%.6f,%.6f,%d\n", s.gamma * 1e3, report.maxima[i].secondary, s.alpha);
    secondary << row;
  }
}

int cmd_simulate(const CommonOptions& o, const std::string& beam_file) {
  const Scenario sc = load_scenario(o.scenario);
  const Problem problem = make_problem(sc, o.threads);
  const BeamParameters beam = beam_file.empty() ? initial_beam(sc, problem.path->num_segments())
                                                : read_decision_table(beam_file, problem.path->num_segments());
  problem.bounds.check(beam);
  const fs::path dir = output_dir(o, sc);
  const ThermalModel model(problem.path, problem.material, beam, problem.jump_dwell, problem.quadrature);
  MaxSampling sampling = problem.objective.report_sampling();

  if (const auto& g = sc.outputs.surface_grid; g.enabled) {
    std::vector<Point3> grid;
    for (double y : axis(g.y_min_mm, g.y_max_mm, g.step_mm)) {
      for (double x : axis(g.x_min_mm, g.x_max_mm, g.step_mm)) grid.push_back({x, y, 0.0});
    }
    write_grid_csv(dir / "surface_max.csv", grid, max_field(model, grid, o.threads, sampling));
  }
  if (const auto& c = sc.outputs.cross_section; c.enabled) {
    std::vector<Point3> grid;
    for (double z : axis(c.z_min_mm, c.z_max_mm, c.step_mm)) {
      for (double y : axis(c.y_min_mm, c.y_max_mm, c.step_mm)) grid.push_back({c.x_mm * 1e-3, y, z});
    }
    write_grid_csv(dir / "cross_section_max.csv", grid, max_field(model, grid, o.threads, sampling));
  }
  const ObjectiveReport report = problem.evaluate(beam, sc.outputs.profiles);
  if (sc.outputs.profiles) write_profiles(dir, problem, report);
  write_json(dir / "objective.json", report_json(report));
  std::printf("J = %.6g K^2 m; outputs in %s\n", report.J, dir.string().c_str());
  return 0;
}

int cmd_optimize(const CommonOptions& o) {
  const Scenario sc = load_scenario(o.scenario);
  const Problem full = make_problem(sc, o.threads);
  Problem problem = full;
  const std::size_t lines = sc.algorithm.optimize_lines;
  if (lines > 0) problem.path = std::make_shared<const ScanPath>(leading_lines(*full.path, lines));
  const fs::path dir = output_dir(o, sc);
  const auto started = std::chrono::steady_clock::now();

  // The trace is written as windows complete so an abort leaves it behind.
  auto trace = open_out(dir / "trace.csv");
  trace << "window,p,q,r,first_segment,last_segment,J_before_K2m,J_after_K2m,iterations,evaluations,aborted,message\n";
  std::size_t windows = 0;
  auto on_window = [&](const WindowTrace& t, const BeamParameters&) {
    char row[256];
    std::snprintf(row, sizeof row, "%zu,%zu,%zu,%zu,%zu,%zu,%.10g,%.10g,%u,%u,%d,", ++windows, t.p + 1, t.q + 1, t.r,
                  t.first_segment + 1, t.last_segment + 1, t.J_before, t.J_after, t.iterations, t.evaluations,
                  t.aborted ? 1 : 0);
    trace << row << '"' << t.message << "\"\n" << std::flush;
    std::fprintf(stderr, "window %zu [%zu, %zu]: J %.4g -> %.4g\n", windows, t.p + 1, t.q + 1, t.J_before, t.J_after);
  };

  const WindowSchedule schedule = WindowSchedule::constant(sc.algorithm.window, sc.algorithm.freeze);
  GreedyResult result;
  json coefficients;
  if (sc.algorithm.kind == "linewise") {
    const auto bounds = coefficient_bounds(sc);
    const auto initial = initial_coefficients(*problem.path, sc.algorithm.initial_spot_mm * 1e-3,
                                              sc.algorithm.initial_speed_mm_s * 1e-3, problem.bounds, bounds,
                                              sc.algorithm.c3_init);
    auto lw = greedy_linewise(problem, schedule, initial, bounds, solver_options(sc), on_window);
    coefficients = json::array();
    for (std::size_t l = 0; l < lw.coefficients.size(); ++l) {
      const auto& c = lw.coefficients[l];
      coefficients.push_back({{"line", l + 1},
                              {"sigma_m", {c.spot.c1, c.spot.c2, c.spot.c3, c.spot.c4}},
                              {"v_m_s", {c.speed.c1, c.speed.c2, c.speed.c3, c.speed.c4}}});
    }
    result = std::move(lw.greedy);
  } else {
    result = greedy_segmentwise(problem, schedule, initial_beam(sc, problem.path->num_segments()),
                                solver_options(sc), on_window);
  }

  BeamParameters table = result.beam;
  json extended;
  if (lines > 0) {
    table = extend_solution(*full.path, lines, result.beam, extend_rule(sc));
    const ObjectiveReport report = full.evaluate(table);
    extended = {{"segments", full.path->num_segments()}, {"objective", report_json(report)}};
  }
  write_decision_table(dir / "decision_table.csv", *full.path, table);

  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json summary = {{"scenario", sc.name},
                  {"algorithm", sc.algorithm.kind},
                  {"segments_optimized", problem.path->num_segments()},
                  {"segments_total", full.path->num_segments()},
                  {"J_init", result.J_init},
                  {"J_opt", result.J_opt},
                  {"J_units", "K^2 m"},
                  {"windows", result.trace.size()},
                  {"aborted", result.any_aborted},
                  {"warnings", result.warnings},
                  {"runtime_s", runtime},
                  {"objective_initial", report_json(result.initial)},
                  {"objective_optimized", report_json(result.optimized)}};
  if (!coefficients.is_null()) summary["coefficients"] = coefficients;
  if (!extended.is_null()) summary["extended"] = extended;
  write_json(dir / "summary.json", summary);
  for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("J_init = %.6g, J_opt = %.6g K^2 m (%zu windows, %.1f s); outputs in %s\n", result.J_init,
              result.J_opt, result.trace.size(), runtime, dir.string().c_str());
  if (result.any_aborted) {
    std::fprintf(stderr, "error: a window solve aborted; see %s\n", (dir / "trace.csv").string().c_str());
    return kExitSolver;
  }
  return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::string& table_file) {
  const Scenario sc = load_scenario(o.scenario);
  const Problem problem = make_problem(sc, o.threads);
  const BeamParameters beam = read_decision_table(table_file, problem.path->num_segments());
  problem.bounds.check(beam);
  const json report = report_json(problem.evaluate(beam));
  if (!o.out.empty()) write_json(output_dir(o, sc) / "objective.json", report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beam spot size and speed optimization for powder-bed fusion"};
  app.require_subcommand(1);

  CommonOptions simulate_opts, optimize_opts, evaluate_opts;
  std::string beam_file, table_file;

  auto* simulate = app.add_subcommand("simulate", "Maximum-temperature fields and path profiles");
  add_common(simulate, simulate_opts);
  simulate->add_option("--beam", beam_file, "Decision table CSV (default: the scenario's initial guess)");

  auto* optimize = app.add_subcommand("optimize", "Run the scenario's greedy optimization");
  add_common(optimize, optimize_opts);

  auto* evaluate = app.add_subcommand("evaluate", "Objective report for a decision table");
  add_common(evaluate, evaluate_opts);
  evaluate->add_option("--table", table_file, "Decision table CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(simulate_opts, beam_file);
    if (*optimize) return cmd_optimize(optimize_opts);
    return cmd_evaluate(evaluate_opts, table_file);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kExitSolver;
  }
}
