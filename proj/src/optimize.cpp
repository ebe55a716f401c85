#include "beamopt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "beamopt/error.hpp"

namespace beamopt {

void ParameterBounds::validate() const {
  if (!(spot_min > 0.0 && spot_min < spot_max)) throw ConfigError("spot size bounds must satisfy 0 < min < max");
  if (!(speed_min > 0.0 && speed_min < speed_max)) throw ConfigError("speed bounds must satisfy 0 < min < max");
}

void ParameterBounds::check(const BeamParameters& beam) const {
  for (std::size_t k = 0; k < beam.spot_size.size(); ++k) {
    if (!(beam.spot_size[k] >= spot_min && beam.spot_size[k] <= spot_max) ||
        !(beam.speed[k] >= speed_min && beam.speed[k] <= speed_max)) {
      throw ConfigError("beam parameters of segment " + std::to_string(k + 1) + " outside bounds");
    }
  }
}

WindowSchedule WindowSchedule::constant(std::size_t size, std::size_t r) {
  if (size == 0 || r == 0 || r > size) throw ConfigError("window schedule needs 1 <= r <= size");
  return {[size](std::size_t p) { return p + size - 1; }, [r](std::size_t) { return r; }};
}

void Problem::validate() const {
  if (!path) throw ConfigError("problem has no path");
  material.validate();
  objective.validate(material.initial_temperature);
  bounds.validate();
  if (!(jump_dwell >= 0.0)) throw ConfigError("jump dwell must be >= 0");
}

std::shared_ptr<const PathSampling> Problem::make_sampling() const {
  const SecondaryPath secondary(*path, objective.secondary);
  return std::make_shared<const PathSampling>(*path, secondary, objective.sample_spacing, objective.margin);
}

ObjectiveReport Problem::evaluate(const BeamParameters& beam, bool include_masked) const {
  const ThermalModel model(path, material, beam, jump_dwell, quadrature);
  return global_objective(model, objective, *make_sampling(), include_masked, threads);
}

namespace {

struct Cursor {
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t r = 0;
};

Cursor window_at(const WindowSchedule& schedule, std::size_t p, std::size_t count) {
  Cursor c;
  c.p = p;
  c.q = std::min(schedule.last(p), count - 1);
  if (c.q < p) throw ConfigError("window schedule returned q < p at p = " + std::to_string(p + 1));
  c.r = std::min(schedule.freeze(p), c.q - p + 1);
  if (c.r == 0) throw ConfigError("window schedule froze nothing at p = " + std::to_string(p + 1));
  return c;
}

// Runs the inner solver on one window; failure of the solver keeps the best
// candidate found (or the warm start) so the sweep can continue.
SolverResult solve_window(const ScalarObjective& f, const std::vector<double>& x0, const Bounds& bounds,
                          const SolverOptions& options, WindowTrace& trace, GreedyResult& out) {
  SolverResult result;
  try {
    result = solve_box_qn(f, x0, bounds, options);
  } catch (const SolverError& e) {
    result.x = x0;
    result.aborted = true;
    result.message = e.what();
  }
  trace.J_before = result.initial_objective;
  trace.J_after = result.objective;
  trace.iterations = result.iterations;
  trace.evaluations = result.evaluations;
  trace.aborted = result.aborted;
  trace.message = result.message;
  const std::string where = "window [" + std::to_string(trace.p + 1) + ", " + std::to_string(trace.q + 1) + "]";
  if (result.aborted) {
    out.any_aborted = true;
    out.warnings.push_back(where + ": inner solver aborted (" + result.message + "); freezing best candidate");
  }
  if (trace.J_after > 10.0 * trace.J_before) {
    out.warnings.push_back(where + ": J_pq rose more than tenfold during the solve; freezing anyway");
  }
  return result;
}

void finish(const Problem& problem, GreedyResult& out) {
  out.optimized = problem.evaluate(out.beam);
  out.J_opt = out.optimized.J;
}

}  // namespace

GreedyResult greedy_segmentwise(const Problem& problem, const WindowSchedule& schedule, const BeamParameters& initial,
                                const SolverOptions& solver, const WindowCallback& on_window) {
  problem.validate();
  solver.validate();
  const std::size_t n = problem.path->num_segments();
  initial.validate(n);
  problem.bounds.check(initial);
  const auto sampling = problem.make_sampling();

  GreedyResult out;
  out.beam = initial;
  out.initial = problem.evaluate(initial);
  out.J_init = out.initial.J;

  Cursor c = window_at(schedule, 0, n);
  while (c.p < n) {
    const std::size_t m = c.q - c.p + 1;
    const LocalObjective local(problem.path, problem.material, problem.objective, sampling, out.beam,
                               {c.p, c.q, c.r}, problem.jump_dwell, problem.quadrature, problem.threads);
    std::vector<double> x0(2 * m);
    Bounds bounds{std::vector<double>(2 * m), std::vector<double>(2 * m)};
    for (std::size_t i = 0; i < m; ++i) {
      x0[i] = out.beam.spot_size[c.p + i];
      x0[m + i] = out.beam.speed[c.p + i];
      bounds.lower[i] = problem.bounds.spot_min;
      bounds.upper[i] = problem.bounds.spot_max;
      bounds.lower[m + i] = problem.bounds.speed_min;
      bounds.upper[m + i] = problem.bounds.speed_max;
    }
    auto f = [&](std::span<const double> x) { return local(x.subspan(0, m), x.subspan(m, m)); };

    WindowTrace trace;
    trace.p = trace.first_segment = c.p;
    trace.q = trace.last_segment = c.q;
    trace.r = c.r;
    const SolverResult result = solve_window(f, x0, bounds, solver, trace, out);

    // Accept the candidate on the window and carry the last pair forward.
    for (std::size_t i = 0; i < m; ++i) {
      out.beam.spot_size[c.p + i] = result.x[i];
      out.beam.speed[c.p + i] = result.x[m + i];
    }
    for (std::size_t k = c.q + 1; k < n; ++k) {
      out.beam.spot_size[k] = result.x[m - 1];
      out.beam.speed[k] = result.x[2 * m - 1];
    }
    out.trace.push_back(trace);
    if (on_window) on_window(trace, out.beam);

    const std::size_t next = c.p + c.r;
    if (next >= n) break;
    c = window_at(schedule, next, n);
  }
  finish(problem, out);
  return out;
}

double ParameterFunction::operator()(double gamma_tilde) const {
  const double g = std::max(0.0, gamma_tilde);
  const double power = g > 0.0 ? std::pow(g, c4) : 0.0;
  return c1 * (1.0 + c2 / (1.0 + c3 * power));
}

void CoefficientBounds::validate() const {
  if (!(c2_max >= 0.0) || !(c3_max >= 0.0) || !(c4_min > 0.0 && c4_min <= c4_max)) {
    throw ConfigError("coefficient bounds need C2_max >= 0, C3_max >= 0, 0 < C4_min <= C4_max");
  }
}

std::pair<std::array<double, 8>, std::array<double, 8>> CoefficientBounds::line_bounds(
    const ParameterBounds& physical) const {
  return {{physical.spot_min, 0.0, 0.0, c4_min, physical.speed_min, 0.0, 0.0, c4_min},
          {physical.spot_max, c2_max, c3_max, c4_max, physical.speed_max, c2_max, c3_max, c4_max}};
}

namespace {

void apply_line(const ScanPath& path, std::size_t l, const LineCoefficients& c, const ParameterBounds& bounds,
                BeamParameters& beam) {
  const auto& line = path.line(l);
  const double origin = path.start_distance(line.first_segment);
  for (std::size_t k = line.first_segment; k <= line.last_segment; ++k) {
    const double g = path.start_distance(k) - origin;
    beam.spot_size[k] = std::clamp(c.spot(g), bounds.spot_min, bounds.spot_max);
    beam.speed[k] = std::clamp(c.speed(g), bounds.speed_min, bounds.speed_max);
  }
}

}  // namespace

BeamParameters eval_parameter_functions(const ScanPath& path, const std::vector<LineCoefficients>& coefficients,
                                        const ParameterBounds& bounds) {
  if (coefficients.size() != path.num_lines()) {
    throw ConfigError("expected coefficients for " + std::to_string(path.num_lines()) + " hatch lines, got " +
                      std::to_string(coefficients.size()));
  }
  BeamParameters beam = BeamParameters::uniform(path.num_segments(), 0.0, 0.0);
  for (std::size_t l = 0; l < path.num_lines(); ++l) apply_line(path, l, coefficients[l], bounds, beam);
  return beam;
}

std::vector<LineCoefficients> initial_coefficients(const ScanPath& path, double spot_size, double speed,
                                                   const ParameterBounds& physical, const CoefficientBounds& bounds,
                                                   double c3_init) {
  physical.validate();
  bounds.validate();
  if (!(c3_init >= 0.0 && c3_init <= bounds.c3_max)) throw ConfigError("initial C3 outside its bounds");
  constexpr double kC2 = 0.5;
  constexpr double kC4 = 1.0;
  const double c2 = std::min(kC2, bounds.c2_max);
  const double c4 = std::clamp(kC4, bounds.c4_min, bounds.c4_max);
  std::vector<LineCoefficients> out;
  out.reserve(path.num_lines());
  for (std::size_t l = 0; l < path.num_lines(); ++l) {
    const auto& line = path.line(l);
    // min over C1 of sum_k (C1 f_k - c)^2 gives C1 = c sum f_k / sum f_k^2.
    const ParameterFunction shape{1.0, c2, c3_init, c4};
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t k = line.first_segment; k <= line.last_segment; ++k) {
      const double f = shape(path.start_distance(k) - path.start_distance(line.first_segment));
      sum += f;
      sum2 += f * f;
    }
    const double scale = sum / sum2;
    out.push_back({{std::clamp(spot_size * scale, physical.spot_min, physical.spot_max), c2, c3_init, c4},
                   {std::clamp(speed * scale, physical.speed_min, physical.speed_max), c2, c3_init, c4}});
  }
  return out;
}

LinewiseResult greedy_linewise(const Problem& problem, const WindowSchedule& schedule,
                               const std::vector<LineCoefficients>& initial, const CoefficientBounds& bounds,
                               const SolverOptions& solver, const WindowCallback& on_window) {
  problem.validate();
  solver.validate();
  bounds.validate();
  const ScanPath& path = *problem.path;
  const std::size_t lines = path.num_lines();
  const auto [lo, hi] = bounds.line_bounds(problem.bounds);
  for (std::size_t l = 0; l < initial.size(); ++l) {
    const auto s = initial[l].spot.as_array();
    const auto v = initial[l].speed.as_array();
    for (std::size_t i = 0; i < 4; ++i) {
      if (!(s[i] >= lo[i] && s[i] <= hi[i]) || !(v[i] >= lo[4 + i] && v[i] <= hi[4 + i])) {
        throw ConfigError("initial coefficients of hatch line " + std::to_string(l + 1) + " outside bounds");
      }
    }
  }
  const auto sampling = problem.make_sampling();

  LinewiseResult out;
  out.coefficients = initial;
  GreedyResult& g = out.greedy;
  g.beam = eval_parameter_functions(path, initial, problem.bounds);
  g.initial = problem.evaluate(g.beam);
  g.J_init = g.initial.J;

  Cursor c = window_at(schedule, 0, lines);
  while (c.p < lines) {
    const std::size_t m = c.q - c.p + 1;
    const std::size_t first = path.line(c.p).first_segment;
    const std::size_t last = path.line(c.q).last_segment;
    const std::size_t freeze = path.line(c.p + c.r - 1).last_segment - first + 1;
    const LocalObjective local(problem.path, problem.material, problem.objective, sampling, g.beam,
                               {first, last, freeze}, problem.jump_dwell, problem.quadrature, problem.threads);

    std::vector<double> x0(8 * m);
    Bounds box{std::vector<double>(8 * m), std::vector<double>(8 * m)};
    for (std::size_t j = 0; j < m; ++j) {
      const auto s = out.coefficients[c.p + j].spot.as_array();
      const auto v = out.coefficients[c.p + j].speed.as_array();
      std::copy(s.begin(), s.end(), x0.begin() + static_cast<std::ptrdiff_t>(8 * j));
      std::copy(v.begin(), v.end(), x0.begin() + static_cast<std::ptrdiff_t>(8 * j + 4));
      std::copy(lo.begin(), lo.end(), box.lower.begin() + static_cast<std::ptrdiff_t>(8 * j));
      std::copy(hi.begin(), hi.end(), box.upper.begin() + static_cast<std::ptrdiff_t>(8 * j));
    }
    BeamParameters work = g.beam;
    auto f = [&](std::span<const double> x) {
      for (std::size_t j = 0; j < m; ++j) {
        const LineCoefficients lc{ParameterFunction::from(x.data() + 8 * j),
                                  ParameterFunction::from(x.data() + 8 * j + 4)};
        apply_line(path, c.p + j, lc, problem.bounds, work);
      }
      const auto offset = static_cast<std::ptrdiff_t>(first);
      const auto count = static_cast<std::ptrdiff_t>(last - first + 1);
      return local(std::span<const double>(work.spot_size.data() + offset, static_cast<std::size_t>(count)),
                   std::span<const double>(work.speed.data() + offset, static_cast<std::size_t>(count)));
    };

    WindowTrace trace;
    trace.p = c.p;
    trace.q = c.q;
    trace.r = c.r;
    trace.first_segment = first;
    trace.last_segment = last;
    const SolverResult result = solve_window(f, x0, box, solver, trace, g);

    for (std::size_t j = 0; j < m; ++j) {
      out.coefficients[c.p + j] = {ParameterFunction::from(result.x.data() + 8 * j),
                                   ParameterFunction::from(result.x.data() + 8 * j + 4)};
    }
    for (std::size_t l = c.q + 1; l < lines; ++l) out.coefficients[l] = out.coefficients[c.q];
    g.beam = eval_parameter_functions(path, out.coefficients, problem.bounds);
    g.trace.push_back(trace);
    if (on_window) on_window(trace, g.beam);

    const std::size_t next = c.p + c.r;
    if (next >= lines) break;
    c = window_at(schedule, next, lines);
  }
  finish(problem, g);
  return out;
}

BeamParameters extend_solution(const ScanPath& path, std::size_t lines, const BeamParameters& partial,
                               ExtendRule rule) {
  if (lines == 0 || lines > path.num_lines()) {
    throw ConfigError("number of optimized lines must be in [1, " + std::to_string(path.num_lines()) + "]");
  }
  const auto& source = path.line(lines - 1);
  const std::size_t covered = source.last_segment + 1;
  partial.validate(covered);
  BeamParameters out = BeamParameters::uniform(path.num_segments(), 0.0, 0.0);
  std::copy(partial.spot_size.begin(), partial.spot_size.end(), out.spot_size.begin());
  std::copy(partial.speed.begin(), partial.speed.end(), out.speed.begin());

  const double source_start = path.start_distance(source.first_segment);
  const double source_length = path.end_distance(source.last_segment) - source_start;
  for (std::size_t l = lines; l < path.num_lines(); ++l) {
    const auto& line = path.line(l);
    if (rule == ExtendRule::by_index && line.num_segments() != source.num_segments()) {
      throw ConfigError("hatch line " + std::to_string(l + 1) + " has " + std::to_string(line.num_segments()) +
                        " segments but line " + std::to_string(lines) + " has " +
                        std::to_string(source.num_segments()) + "; use the fraction mapping");
    }
    const double start = path.start_distance(line.first_segment);
    const double length = path.end_distance(line.last_segment) - start;
    for (std::size_t k = line.first_segment; k <= line.last_segment; ++k) {
      std::size_t from = source.first_segment + (k - line.first_segment);
      if (rule == ExtendRule::by_fraction) {
        const double mid = 0.5 * (path.start_distance(k) + path.end_distance(k)) - start;
        const double target = source_start + (mid / length) * source_length;
        from = source.first_segment;
        while (from < source.last_segment && path.end_distance(from) <= target) ++from;
      }
      out.spot_size[k] = partial.spot_size[from];
      out.speed[k] = partial.speed[from];
    }
  }
  return out;
}

ScanPath leading_lines(const ScanPath& path, std::size_t lines) {
  if (lines == 0 || lines > path.num_lines()) {
    throw ConfigError("number of lines must be in [1, " + std::to_string(path.num_lines()) + "]");
  }
  auto endpoints = path.endpoints();
  endpoints.resize(path.line(lines - 1).last_segment + 1);
  return ScanPath(endpoints);
}

}  // namespace beamopt
