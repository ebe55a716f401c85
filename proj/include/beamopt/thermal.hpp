#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "beamopt/geometry.hpp"
#include "beamopt/scan_path.hpp"

namespace beamopt {

struct MaterialParams {
  double conductivity = 20.0;         // lambda, W/(m K)
  double diffusivity = 8.45e-6;       // kappa, m^2/s
  double initial_temperature = 1000;  // K
  double power = 100.0;               // absorbed beam power, W

  double volumetric_heat_capacity() const { return conductivity / diffusivity; }  // rho c_p
  void validate() const;
};

// Per-segment spot size sigma_k (m) and speed v_k (m/s).
struct BeamParameters {
  std::vector<double> spot_size;
  std::vector<double> speed;

  static BeamParameters uniform(std::size_t n, double spot_size, double speed) {
    return {std::vector<double>(n, spot_size), std::vector<double>(n, speed)};
  }
  void validate(std::size_t num_segments) const;
};

struct QuadratureOptions {
  double rel_tol = 1e-7;
  double abs_tol = 1e-9;          // K
  unsigned max_intervals = 400;  // bisections allowed per kernel integral
  double cull_threshold = 1e-9;   // K; skip segments whose bound is below this
};

// Pointwise analytic temperature for a Gaussian beam moving along a
// piecewise-linear path over an insulated half-space z <= 0.
//
// Each segment contributes
//   (P / rho c_p) \int d tau  exp(-|x - x_b(t - tau)|^2 / (2 a)) / (2 pi a)
//                              * exp(-z^2 / (4 kappa tau)) / sqrt(pi kappa tau),
//   a = 2 kappa tau + sigma_k^2,
// over the part of its history already scanned at time t. The integral is
// evaluated in s = sqrt(tau), which removes the endpoint singularity.
class ThermalModel {
 public:
  ThermalModel(std::shared_ptr<const ScanPath> path, MaterialParams material, BeamParameters beam,
               double jump_dwell = 0.0, QuadratureOptions quadrature = {});

  const ScanPath& path() const { return *path_; }
  const std::shared_ptr<const ScanPath>& path_ptr() const { return path_; }
  const MaterialParams& material() const { return material_; }
  const BeamParameters& beam() const { return beam_; }
  const ScanTiming& timing() const { return timing_; }
  const QuadratureOptions& quadrature() const { return quadrature_; }
  double jump_dwell() const { return jump_dwell_; }

  // Temperature rise at x and time t caused by segment k. Zero for
  // t <= t_k^i. Throws QuadratureError if the tolerance is not met.
  double segment_contribution(const Point3& x, double t, std::size_t k) const;

  // Conservative upper bound on segment_contribution.
  double contribution_bound(const Point3& x, double t, std::size_t k) const;

  // Sum of contributions from segments first..last (inclusive), ascending,
  // with culling.
  double temperature_rise(const Point3& x, double t, std::size_t first, std::size_t last) const;

  // u(x, t) = u_init + sum over started segments. Requires 0 <= t <= T, z <= 0.
  double temperature(const Point3& x, double t) const;

 private:
  struct SegmentCache {
    Point3 start;
    Point3 dir;
    double length;
    double speed;
    double sigma2;
    double t_start;
    double t_end;
  };

  std::shared_ptr<const ScanPath> path_;
  MaterialParams material_;
  BeamParameters beam_;
  double jump_dwell_;
  QuadratureOptions quadrature_;
  ScanTiming timing_;
  std::vector<SegmentCache> cache_;
  double amplitude_;  // P / rho c_p
};

enum class MaxMethod { exact_sampled, smoothed };

// Controls the time sampling of a point's temperature over a window.
struct MaxSampling {
  // Beam advance per coarse time sample (m). Zero selects min sigma / 4
  // over the window.
  double advance = 0.0;
  // Length that normalizes the scanning-distance measure of the smoothed
  // maximum (m). Zero uses the advance.
  double reference_length = 0.0;
  // Smoothed: sub-samples per coarse interval near the peak.
  unsigned refine_subdivisions = 4;
  // Exact: golden-section tolerance on the refined maximum (K).
  double golden_tolerance = 1e-3;
  // Exact: skip interior samples while the beam is farther than this from
  // the point in the plane (m). Zero disables pruning.
  double near_radius = 0.0;
};

struct MaxTempQuery {
  Point3 point;
  std::size_t first_segment = 0;
  std::size_t last_segment = 0;
  MaxMethod method = MaxMethod::exact_sampled;
  double smoothing = 0.1;  // K in 1/Kelvin, smoothed method only
};

// Maximum (or log-sum-exp relaxed maximum) of u(x, t) over the window
// (t_p^i, t_q^f]. Throws ConfigError for an invalid window.
double max_temperature(const ThermalModel& model, const MaxTempQuery& query, const MaxSampling& sampling = {});

// Shifted log-sum-exp: (1/K) log(sum w_i exp(K u_i)).
double smoothed_max(std::span<const double> values, std::span<const double> weights, double smoothing);

struct TimeSpec {
  enum class Kind { snapshot, max_over_time } kind = Kind::max_over_time;
  double time = 0.0;  // snapshot only
};

// Elementwise temperature or maximum temperature over the whole scan.
std::vector<double> field_on_grid(const ThermalModel& model, std::span<const Point3> grid, TimeSpec time_spec,
                                  const MaxSampling& sampling = {});

}  // namespace beamopt
