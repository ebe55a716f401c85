#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace beamopt {

struct SolverOptions {
  double fd_step = 1e-6;               // on normalized coordinates
  unsigned max_iterations = 50;
  double objective_tolerance = 1e-3;   // relative decrease per iteration
  double gradient_tolerance = 1e-10;   // projected gradient, inf-norm, normalized coordinates
  unsigned history = 10;               // stored curvature pairs
  unsigned max_line_search = 25;
  double first_step = 0.05;            // inf-norm of the first steepest-descent step

  void validate() const;
};

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct SolverIteration {
  unsigned iteration = 0;
  double objective = 0.0;
  double projected_gradient = 0.0;
  unsigned evaluations = 0;
};

struct SolverResult {
  std::vector<double> x;
  double objective = 0.0;
  double initial_objective = 0.0;
  unsigned iterations = 0;
  unsigned evaluations = 0;
  bool aborted = false;  // objective evaluation failed; x is the best iterate so far
  std::string message;
  std::vector<SolverIteration> trace;
};

using ScalarObjective = std::function<double(std::span<const double>)>;

// Projected limited-memory BFGS for min f(x) s.t. lower <= x <= upper.
// Works on coordinates affinely mapped to [0, 1] by the bounds; gradients
// are 2-point finite differences (forward, or backward at the upper bound).
// Coordinates with lower == upper are held fixed.
//
// Throws ConfigError for x0 outside the bounds and SolverError when f(x0)
// is not finite.
SolverResult solve_box_qn(const ScalarObjective& objective, std::span<const double> x0, const Bounds& bounds,
                          const SolverOptions& options = {});

}  // namespace beamopt
