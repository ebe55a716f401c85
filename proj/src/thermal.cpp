#include "beamopt/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "beamopt/error.hpp"
#include "beamopt/window_max.hpp"

namespace beamopt {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;

// Squared in-plane distance from p to the segment a + s (b - a), s in [0, 1].
double plane_distance2_to_segment(const Point3& p, const Point3& a, const Point3& b) {
  const double ux = b.x - a.x;
  const double uy = b.y - a.y;
  const double len2 = ux * ux + uy * uy;
  double s = len2 > 0.0 ? ((p.x - a.x) * ux + (p.y - a.y) * uy) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  const double dx = p.x - (a.x + s * ux);
  const double dy = p.y - (a.y + s * uy);
  return dx * dx + dy * dy;
}

}  // namespace

void MaterialParams::validate() const {
  if (!(conductivity > 0.0)) throw ConfigError("conductivity must be > 0");
  if (!(diffusivity > 0.0)) throw ConfigError("diffusivity must be > 0");
  if (!(power >= 0.0)) throw ConfigError("power must be >= 0");
  if (!(initial_temperature > 0.0)) throw ConfigError("initial temperature must be > 0");
}

void BeamParameters::validate(std::size_t num_segments) const {
  if (spot_size.size() != num_segments || speed.size() != num_segments) {
    throw ConfigError("beam parameter arrays must have " + std::to_string(num_segments) + " entries");
  }
  for (std::size_t k = 0; k < num_segments; ++k) {
    if (!(spot_size[k] > 0.0) || !std::isfinite(spot_size[k])) {
      throw ConfigError("spot size on segment " + std::to_string(k + 1) + " must be positive");
    }
    if (!(speed[k] > 0.0) || !std::isfinite(speed[k])) {
      throw ConfigError("speed on segment " + std::to_string(k + 1) + " must be positive");
    }
  }
}

ThermalModel::ThermalModel(std::shared_ptr<const ScanPath> path, MaterialParams material, BeamParameters beam,
                           double jump_dwell, QuadratureOptions quadrature)
    : path_(std::move(path)),
      material_(material),
      beam_(std::move(beam)),
      jump_dwell_(jump_dwell),
      quadrature_(quadrature),
      timing_((material_.validate(), beam_.validate(path_->num_segments()), *path_), beam_.speed, jump_dwell) {
  amplitude_ = material_.power / material_.volumetric_heat_capacity();
  cache_.reserve(path_->num_segments());
  for (std::size_t k = 0; k < path_->num_segments(); ++k) {
    const auto& s = path_->segment(k);
    cache_.push_back({s.start, s.direction(), s.length, beam_.speed[k], beam_.spot_size[k] * beam_.spot_size[k],
                      timing_.start(k), timing_.end(k)});
  }
}

double ThermalModel::contribution_bound(const Point3& x, double t, std::size_t k) const {
  const auto& c = cache_[k];
  if (t <= c.t_start) return 0.0;
  const double kappa = material_.diffusivity;
  const double tau_lo = std::max(0.0, t - c.t_end);
  const double tau_hi = t - c.t_start;
  // Portion of the segment scanned by time t.
  const double scanned = std::min(c.length, c.speed * tau_hi);
  const Point3 reached = c.start + scanned * c.dir;
  const double d2 = plane_distance2_to_segment(x, c.start, reached);
  const double a_lo = 2.0 * kappa * tau_lo + c.sigma2;
  const double a_hi = 2.0 * kappa * tau_hi + c.sigma2;
  const double depth = std::exp(-x.z * x.z / (4.0 * kappa * tau_hi));
  return amplitude_ / (2.0 * std::numbers::pi * a_lo) * std::exp(-d2 / (2.0 * a_hi)) * depth * 2.0 *
         (std::sqrt(tau_hi) - std::sqrt(tau_lo)) / std::sqrt(std::numbers::pi * kappa);
}

double ThermalModel::segment_contribution(const Point3& x, double t, std::size_t k) const {
  const auto& c = cache_.at(k);
  if (t <= c.t_start) return 0.0;
  const double kappa = material_.diffusivity;
  const double tau_lo = std::max(0.0, t - c.t_end);
  const double tau_hi = t - c.t_start;

  // Along-track and cross-track coordinates of x relative to the segment start.
  const double rx = x.x - c.start.x;
  const double ry = x.y - c.start.y;
  const double along = rx * c.dir.x + ry * c.dir.y;
  const double cross2 = std::max(0.0, rx * rx + ry * ry - along * along);
  const double z2 = x.z * x.z;
  const double v = c.speed;
  const double sigma2 = c.sigma2;
  const double prefactor = amplitude_ * 2.0 / std::sqrt(std::numbers::pi * kappa) / (2.0 * std::numbers::pi);

  // tau = s^2, d tau / sqrt(tau) = 2 ds.
  auto integrand = [&](double s) {
    const double tau = s * s;
    const double a = 2.0 * kappa * tau + sigma2;
    const double offset = along - v * (tau_hi - tau);
    double exponent = -(offset * offset + cross2) / (2.0 * a);
    if (z2 > 0.0) exponent -= tau > 0.0 ? z2 / (4.0 * kappa * tau) : std::numeric_limits<double>::infinity();
    return std::exp(exponent) / a;
  };

  // Split at the time of closest approach, where the integrand peaks, and
  // bracket the pulse so that no piece is much wider than it.
  const double tau_peak = std::clamp(tau_hi - along / v, tau_lo, tau_hi);
  const double pulse = 6.0 * std::sqrt(2.0 * kappa * tau_peak + sigma2) / v;
  const double splits[] = {tau_lo, std::max(tau_lo, tau_peak - pulse), tau_peak, std::min(tau_hi, tau_peak + pulse),
                           tau_hi};

  // Globally adaptive: bisect the piece with the largest error estimate
  // until the summed error meets max(rel_tol |I|, abs_tol).
  struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  auto rule = [&](double a, double b) {
    double err = 0.0;
    const double value = Kronrod::integrate(integrand, a, b, 0, 0.0, &err);
    return Piece{a, b, value, err};
  };
  std::priority_queue<Piece> pieces;
  double total = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < std::size(splits); ++i) {
    const double a = std::sqrt(splits[i]);
    const double b = std::sqrt(splits[i + 1]);
    if (!(b > a)) continue;
    pieces.push(rule(a, b));
    total += pieces.top().value;
  }
  auto summed_error = [&] {
    error = 0.0;
    auto copy = pieces;
    for (; !copy.empty(); copy.pop()) error += copy.top().error;
    return error;
  };
  const double abs_tol = quadrature_.abs_tol / prefactor;
  error = summed_error();
  for (unsigned n = 0; n < quadrature_.max_intervals && !pieces.empty(); ++n) {
    if (error <= std::max(quadrature_.rel_tol * std::abs(total), abs_tol)) break;
    const Piece worst = pieces.top();
    pieces.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Piece left = rule(worst.a, mid);
    const Piece right = rule(mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    pieces.push(left);
    pieces.push(right);
  }
  // Re-sum to drop accumulated rounding in the running totals.
  total = 0.0;
  for (auto copy = pieces; !copy.empty(); copy.pop()) total += copy.top().value;
  error = summed_error();

  total *= prefactor;
  error *= prefactor;
  if (error > std::max(quadrature_.rel_tol * std::abs(total) * 10.0, quadrature_.abs_tol * 10.0)) {
    throw QuadratureError("segment " + std::to_string(k + 1) + " kernel integral did not converge", total, error);
  }
  return total;
}

double ThermalModel::temperature_rise(const Point3& x, double t, std::size_t first, std::size_t last) const {
  double sum = 0.0;
  for (std::size_t k = first; k <= last && k < cache_.size(); ++k) {
    if (t <= cache_[k].t_start) break;
    if (contribution_bound(x, t, k) < quadrature_.cull_threshold) continue;
    sum += segment_contribution(x, t, k);
  }
  return sum;
}

double ThermalModel::temperature(const Point3& x, double t) const {
  if (!(t >= 0.0) || t > timing_.total_time() * (1.0 + 1e-12)) {
    throw ConfigError("time " + std::to_string(t) + " outside [0, T]");
  }
  if (x.z > 0.0) throw ConfigError("evaluation point must satisfy z <= 0");
  return material_.initial_temperature + temperature_rise(x, t, 0, cache_.size() - 1);
}

SampleGrid make_sample_grid(const ScanPath& path, const ScanTiming& timing, std::size_t first, std::size_t last,
                            double advance) {
  if (!(advance > 0.0)) throw ConfigError("sample advance must be positive");
  SampleGrid grid;
  auto push = [&](double t, double measure, std::size_t k, double frac, bool anchor) {
    if (!grid.times.empty()) grid.interval_measure.push_back(measure);
    grid.times.push_back(t);
    grid.beam.push_back(path.point_at(k, frac));
    grid.anchor.push_back(anchor ? 1 : 0);
  };
  push(timing.start(first), 0.0, first, 0.0, true);
  for (std::size_t k = first; k <= last; ++k) {
    if (k > first && timing.start(k) > timing.end(k - 1)) push(timing.start(k), 0.0, k, 0.0, true);
    const double length = path.segment(k).length;
    const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(length / advance - 1e-9)));
    for (std::size_t j = 1; j <= m; ++j) {
      const double frac = static_cast<double>(j) / static_cast<double>(m);
      const double t = j == m ? timing.end(k) : timing.start(k) + frac * timing.duration(k);
      push(t, length / static_cast<double>(m), k, frac, j == m);
    }
  }
  return grid;
}

double smoothed_max(std::span<const double> values, std::span<const double> weights, double smoothing) {
  if (values.empty() || values.size() != weights.size()) throw ConfigError("smoothed_max needs matching nonempty spans");
  if (!(smoothing > 0.0)) throw ConfigError("smoothing scale must be > 0");
  const double shift = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += weights[i] * std::exp(smoothing * (values[i] - shift));
  return shift + std::log(sum) / smoothing;
}

namespace {

double min_spot_size(const ThermalModel& model, std::size_t first, std::size_t last) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = first; k <= last; ++k) m = std::min(m, model.beam().spot_size[k]);
  return m;
}

}  // namespace

double max_temperature(const ThermalModel& model, const MaxTempQuery& query, const MaxSampling& sampling) {
  const std::size_t n = model.path().num_segments();
  if (query.first_segment > query.last_segment || query.last_segment >= n) {
    throw ConfigError("invalid window [" + std::to_string(query.first_segment + 1) + ", " +
                      std::to_string(query.last_segment + 1) + "]");
  }
  if (query.point.z > 0.0) throw ConfigError("evaluation point must satisfy z <= 0");
  const double advance = sampling.advance > 0.0
                             ? sampling.advance
                             : min_spot_size(model, query.first_segment, query.last_segment) / 4.0;
  const SampleGrid grid =
      make_sample_grid(model.path(), model.timing(), query.first_segment, query.last_segment, advance);
  const double u0 = model.material().initial_temperature;
  const std::size_t last = query.last_segment;
  auto u = [&](double t) { return u0 + model.temperature_rise(query.point, t, 0, last); };
  if (query.method == MaxMethod::exact_sampled) {
    return exact_window_max(u, grid, query.point, sampling.near_radius, sampling.golden_tolerance);
  }
  if (!(query.smoothing > 0.0)) throw ConfigError("smoothing scale must be > 0");
  const double ref = sampling.reference_length > 0.0 ? sampling.reference_length : advance;
  return smoothed_window_max(u, grid, query.smoothing, ref, sampling.refine_subdivisions);
}

std::vector<double> field_on_grid(const ThermalModel& model, std::span<const Point3> grid, TimeSpec time_spec,
                                  const MaxSampling& sampling) {
  if (grid.empty()) throw ConfigError("grid must be nonempty");
  std::vector<double> out;
  out.reserve(grid.size());
  const std::size_t last = model.path().num_segments() - 1;
  for (const auto& x : grid) {
    if (time_spec.kind == TimeSpec::Kind::snapshot) {
      out.push_back(model.temperature(x, time_spec.time));
    } else {
      out.push_back(max_temperature(model, {x, 0, last, MaxMethod::exact_sampled, 0.1}, sampling));
    }
  }
  return out;
}

}  // namespace beamopt
