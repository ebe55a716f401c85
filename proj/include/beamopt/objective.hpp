#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "beamopt/scan_path.hpp"
#include "beamopt/thermal.hpp"

namespace beamopt {

struct ObjectiveSpec {
  double melt_temperature = 1800.0;     // u_melt, tracked on the secondary path (K)
  double surface_temperature = 2800.0;  // u_surf, tracked on the beam path (K)
  double weight_secondary = 0.7;        // W1
  double weight_surface = 0.3;          // W2
  double margin = 4e-4;                 // alpha mask length at each hatch-line end (m)
  double sample_spacing = 5e-5;         // h, path quadrature spacing (m)
  SecondaryPathSpec secondary{1e-4, 5e-5, OffsetMode::global_offset};

  // Maximum used inside the greedy subproblems.
  MaxMethod window_method = MaxMethod::smoothed;
  double smoothing = 0.1;  // K (1/Kelvin)
  // Beam advance per time sample in the subproblems; fixed for a run so the
  // subproblem objective is smooth in the decision variables (m).
  double time_advance = 5e-5;
  double reference_length = 0.0;  // smoothed-max length scale; 0 uses time_advance
  unsigned refine_subdivisions = 4;

  // Reporting-grade exact maximum over the whole scan.
  double near_radius = 1.5e-3;  // m
  double golden_tolerance = 1e-3;

  // Declared relative tolerance for halving h (path quadrature convergence).
  double discretization_tolerance = 0.02;

  // Throws ConfigError when an invariant fails (needs u_init).
  void validate(double initial_temperature) const;

  MaxSampling window_sampling() const;
  MaxSampling report_sampling() const;
};

// One path quadrature node. The same node carries the beam-path point and
// its image on the secondary path.
struct PathSample {
  std::size_t segment = 0;
  std::size_t line = 0;
  double fraction = 0.0;
  double gamma = 0.0;   // scanning distance (m)
  double weight = 0.0;  // path measure (m)
  int alpha = 1;
  Point3 beam_point;
  Point3 secondary_point;
};

// alpha(x) = 0 within `margin` of either end of the hatch line, else 1.
int alpha_mask(const ScanPath& path, std::size_t segment, double fraction, double margin);

// Midpoint-rule sampling of beam and secondary paths.
class PathSampling {
 public:
  PathSampling(const ScanPath& path, const SecondaryPath& secondary, double spacing, double margin);

  const std::vector<PathSample>& samples() const { return samples_; }
  double spacing() const { return spacing_; }
  // Samples belonging to segments first..last are the contiguous range
  // [begin(first), begin(last + 1)).
  std::size_t begin(std::size_t segment) const { return offsets_.at(segment); }

 private:
  double spacing_;
  std::vector<PathSample> samples_;
  std::vector<std::size_t> offsets_;  // size N + 1
};

// Window T_{p,q} with r leading segments about to be frozen.
struct Window {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t freeze = 1;

  void validate(std::size_t num_segments) const;
};

// Piecewise-constant priority weight: 1 on the r leading segments, then
// ((gamma(x_q^f) - gamma(x_k^i)) / (gamma(x_q^f) - gamma(x_p^i)))^2.
double beta_weight(const ScanPath& path, std::size_t segment, const Window& window);

struct LineTerms {
  std::size_t line = 0;
  double g1 = 0.0;  // secondary-path tracking integral (K^2 m)
  double g2 = 0.0;  // beam-path tracking integral (K^2 m)
};

struct SampleMax {
  double beam = 0.0;       // M on the beam path (K)
  double secondary = 0.0;  // M on the secondary path (K)
};

struct ObjectiveReport {
  double J = 0.0;   // K^2 m
  double f1 = 0.0;  // K^2 m
  double f2 = 0.0;  // K^2 m
  std::vector<LineTerms> per_line;
  double sample_spacing = 0.0;
  std::size_t num_samples = 0;
  std::vector<SampleMax> maxima;  // per sample; masked samples included when requested
};

// J = W1 f1 + W2 f2 with M the exact maximum over the whole scan.
// `include_masked` also evaluates M on samples with alpha = 0 (for profiles).
ObjectiveReport global_objective(const ThermalModel& model, const ObjectiveSpec& spec, const PathSampling& sampling,
                                 bool include_masked = false, unsigned threads = 1);

// Sum over segments k < first_segment of their contributions at a fixed
// point, tabulated lazily in sqrt(t - t_p^i) and interpolated with cubic
// Lagrange polynomials. Segments before the window are frozen, so the table
// is reused by every evaluation of a subproblem.
class HistoryCache {
 public:
  HistoryCache(const ThermalModel* frozen_model, Point3 point, std::size_t first_segment, double step = 1e-3);

  // Temperature rise from frozen segments at time t >= t_p^i.
  double operator()(double t);
  std::size_t nodes() const { return values_.size(); }

 private:
  double node(std::size_t j);

  const ThermalModel* model_;
  Point3 point_;
  std::size_t first_;
  double origin_;
  double step_;
  std::vector<double> values_;
};

// Scalarized subproblem J_pq on a window. Parameters of segments before the
// window come from `current` and are treated as frozen; those after the
// window do not act during T_{p,q}.
class LocalObjective {
 public:
  LocalObjective(std::shared_ptr<const ScanPath> path, MaterialParams material, ObjectiveSpec spec,
                 std::shared_ptr<const PathSampling> sampling, BeamParameters current, Window window,
                 double jump_dwell = 0.0, QuadratureOptions quadrature = {}, unsigned threads = 1);

  const Window& window() const { return window_; }
  std::size_t window_size() const { return window_.last - window_.first + 1; }

  struct Terms {
    double J = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
  };

  // J_pq for window spot sizes / speeds (each of length q - p + 1).
  Terms evaluate(std::span<const double> spot_size, std::span<const double> speed) const;
  double operator()(std::span<const double> spot_size, std::span<const double> speed) const {
    return evaluate(spot_size, speed).J;
  }

  // Same subproblem with the exact maximum instead of the configured method.
  Terms evaluate_exact(std::span<const double> spot_size, std::span<const double> speed) const;

 private:
  Terms evaluate_with(std::span<const double> spot_size, std::span<const double> speed, MaxMethod method) const;

  std::shared_ptr<const ScanPath> path_;
  MaterialParams material_;
  ObjectiveSpec spec_;
  std::shared_ptr<const PathSampling> sampling_;
  BeamParameters current_;
  Window window_;
  double jump_dwell_;
  QuadratureOptions quadrature_;
  unsigned threads_;
  std::unique_ptr<ThermalModel> frozen_;
  std::vector<std::size_t> active_;  // unmasked sample indices in the window
  std::vector<double> beta_;         // per active sample
  mutable std::vector<HistoryCache> beam_history_;
  mutable std::vector<HistoryCache> secondary_history_;
};

}  // namespace beamopt
