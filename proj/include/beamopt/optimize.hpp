#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "beamopt/objective.hpp"
#include "beamopt/scan_path.hpp"
#include "beamopt/solver.hpp"
#include "beamopt/thermal.hpp"

namespace beamopt {

// Box bounds on the physical beam parameters.
struct ParameterBounds {
  double spot_min = 1e-5;   // m
  double spot_max = 1e-3;   // m
  double speed_min = 1e-2;  // m/s
  double speed_max = 1e1;   // m/s

  void validate() const;
  // Throws ConfigError when some sigma_k or v_k lies outside the box.
  void check(const BeamParameters& beam) const;
};

// Receding windows: after freezing at p, the next window is
// [p, min(last(p), N - 1)] with min(freeze(p), window length) pairs frozen.
// Indices are 0-based in segments (segment-wise) or hatch lines (line-wise).
struct WindowSchedule {
  std::function<std::size_t(std::size_t)> last;
  std::function<std::size_t(std::size_t)> freeze;

  // Window of `size` units, freezing `r` per step.
  static WindowSchedule constant(std::size_t size, std::size_t r);
};

// Everything a subproblem needs apart from the decision variables.
struct Problem {
  std::shared_ptr<const ScanPath> path;
  MaterialParams material;
  ObjectiveSpec objective;
  ParameterBounds bounds;
  double jump_dwell = 0.0;
  QuadratureOptions quadrature;
  unsigned threads = 1;

  void validate() const;
  std::shared_ptr<const PathSampling> make_sampling() const;
  ObjectiveReport evaluate(const BeamParameters& beam, bool include_masked = false) const;
};

struct WindowTrace {
  std::size_t p = 0;  // first unit of the window (0-based)
  std::size_t q = 0;  // last unit of the window (0-based)
  std::size_t r = 0;  // units frozen after the solve
  std::size_t first_segment = 0;
  std::size_t last_segment = 0;
  double J_before = 0.0;  // J_pq at the warm start
  double J_after = 0.0;   // J_pq at the accepted candidate
  unsigned iterations = 0;
  unsigned evaluations = 0;
  bool aborted = false;
  std::string message;
};

struct GreedyResult {
  BeamParameters beam;  // optimized per-segment parameters
  double J_init = 0.0;
  double J_opt = 0.0;
  ObjectiveReport initial;
  ObjectiveReport optimized;
  std::vector<WindowTrace> trace;
  std::vector<std::string> warnings;
  bool any_aborted = false;
};

// Called after each window is frozen with the trace entry and the current
// per-segment parameters (progress reporting).
using WindowCallback = std::function<void(const WindowTrace&, const BeamParameters&)>;

// Greedy receding-window optimization over per-segment (sigma, v).
GreedyResult greedy_segmentwise(const Problem& problem, const WindowSchedule& schedule, const BeamParameters& initial,
                                const SolverOptions& solver = {}, const WindowCallback& on_window = {});

// Per-line parameter function F(g) = C1 (1 + C2 / (1 + C3 g^C4)), g the
// scanning distance from the start of the hatch line (m).
struct ParameterFunction {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 1.0;

  double operator()(double gamma_tilde) const;
  std::array<double, 4> as_array() const { return {c1, c2, c3, c4}; }
  static ParameterFunction from(const double* c) { return {c[0], c[1], c[2], c[3]}; }
};

struct LineCoefficients {
  ParameterFunction spot;
  ParameterFunction speed;
};

struct CoefficientBounds {
  double c2_max = 20.0;
  double c3_max = 1e7;  // (1/m)^C4
  double c4_min = 0.5;
  double c4_max = 4.0;

  void validate() const;
  // Lower / upper bounds for the 8 coefficients of one line
  // (spot C1..C4, speed C1..C4); C1 bounds are the physical bounds.
  std::pair<std::array<double, 8>, std::array<double, 8>> line_bounds(const ParameterBounds& physical) const;
};

// sigma_k, v_k from the coefficients of the owning hatch line, evaluated at
// the start of segment k and clamped to the physical bounds.
BeamParameters eval_parameter_functions(const ScanPath& path, const std::vector<LineCoefficients>& coefficients,
                                        const ParameterBounds& bounds);

// Initial coefficients: C2 = 0.5, C3 = c3_init, C4 = 1 and C1 fitted by least
// squares to a constant profile, clamped into the bounds.
std::vector<LineCoefficients> initial_coefficients(const ScanPath& path, double spot_size, double speed,
                                                   const ParameterBounds& physical, const CoefficientBounds& bounds,
                                                   double c3_init);

struct LinewiseResult {
  std::vector<LineCoefficients> coefficients;
  GreedyResult greedy;  // beam = induced per-segment parameters
};

// Greedy receding-window optimization over per-line coefficients; the
// schedule is in hatch-line units.
LinewiseResult greedy_linewise(const Problem& problem, const WindowSchedule& schedule,
                               const std::vector<LineCoefficients>& initial, const CoefficientBounds& bounds,
                               const SolverOptions& solver = {}, const WindowCallback& on_window = {});

enum class ExtendRule { by_index, by_fraction };

// Extends per-segment values optimized on the first `lines` hatch lines of
// `path` (given for those lines' segments only) to the whole path by
// copying the last optimized line. by_index requires equal segment counts;
// by_fraction maps each segment's midpoint within-line fraction onto the
// source line.
BeamParameters extend_solution(const ScanPath& path, std::size_t lines, const BeamParameters& partial,
                               ExtendRule rule = ExtendRule::by_fraction);

// The path formed by the first `lines` hatch lines.
ScanPath leading_lines(const ScanPath& path, std::size_t lines);

}  // namespace beamopt
