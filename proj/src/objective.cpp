#include "beamopt/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "beamopt/error.hpp"
#include "beamopt/parallel.hpp"
#include "beamopt/window_max.hpp"

namespace beamopt {

void ObjectiveSpec::validate(double initial_temperature) const {
  if (!(weight_secondary >= 0.0 && weight_surface >= 0.0) || !(weight_secondary + weight_surface > 0.0)) {
    throw ConfigError("objective weights must be >= 0 with a positive sum");
  }
  if (!(melt_temperature > initial_temperature)) throw ConfigError("u_melt must exceed u_init");
  if (!(surface_temperature > melt_temperature)) throw ConfigError("u_surf must exceed u_melt");
  if (!(sample_spacing > 0.0)) throw ConfigError("sample spacing h must be > 0");
  if (!(margin >= 0.0)) throw ConfigError("alpha margin must be >= 0");
  if (!(smoothing > 0.0)) throw ConfigError("smoothing scale K must be > 0");
  if (!(time_advance > 0.0)) throw ConfigError("time advance must be > 0");
  if (!(secondary.depth >= 0.0)) throw ConfigError("secondary depth must be >= 0");
}

MaxSampling ObjectiveSpec::window_sampling() const {
  MaxSampling s;
  s.advance = time_advance;
  s.reference_length = reference_length > 0.0 ? reference_length : time_advance;
  s.refine_subdivisions = refine_subdivisions;
  s.golden_tolerance = golden_tolerance;
  return s;
}

MaxSampling ObjectiveSpec::report_sampling() const {
  MaxSampling s;
  s.advance = 0.0;
  s.golden_tolerance = golden_tolerance;
  s.near_radius = near_radius;
  return s;
}

int alpha_mask(const ScanPath& path, std::size_t segment, double fraction, double margin) {
  const auto& line = path.line(path.line_of_segment(segment));
  const double gamma = path.scan_distance(segment, fraction);
  const double from_start = gamma - path.start_distance(line.first_segment);
  const double to_end = path.end_distance(line.last_segment) - gamma;
  return (from_start < margin || to_end < margin) ? 0 : 1;
}

PathSampling::PathSampling(const ScanPath& path, const SecondaryPath& secondary, double spacing, double margin)
    : spacing_(spacing) {
  if (!(spacing > 0.0)) throw ConfigError("sample spacing must be > 0");
  if (secondary.num_segments() != path.num_segments()) throw ConfigError("secondary path does not match beam path");
  offsets_.reserve(path.num_segments() + 1);
  for (std::size_t k = 0; k < path.num_segments(); ++k) {
    offsets_.push_back(samples_.size());
    const double length = path.segment(k).length;
    const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(length / spacing - 1e-9)));
    for (std::size_t j = 0; j < m; ++j) {
      PathSample s;
      s.segment = k;
      s.line = path.line_of_segment(k);
      s.fraction = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
      s.gamma = path.scan_distance(k, s.fraction);
      s.weight = length / static_cast<double>(m);
      s.alpha = alpha_mask(path, k, s.fraction, margin);
      s.beam_point = path.point_at(k, s.fraction);
      s.secondary_point = secondary.point_at(k, s.fraction);
      samples_.push_back(s);
    }
  }
  offsets_.push_back(samples_.size());
}

void Window::validate(std::size_t num_segments) const {
  if (first > last || last >= num_segments) {
    throw ConfigError("invalid window [" + std::to_string(first + 1) + ", " + std::to_string(last + 1) + "]");
  }
  if (freeze < 1 || freeze > last - first + 1) throw ConfigError("freeze count must be in [1, q - p + 1]");
}

double beta_weight(const ScanPath& path, std::size_t segment, const Window& window) {
  if (segment < window.first || segment > window.last) {
    throw ConfigError("segment " + std::to_string(segment + 1) + " outside window");
  }
  if (segment < window.first + window.freeze) return 1.0;
  const double end = path.end_distance(window.last);
  const double ratio = (end - path.start_distance(segment)) / (end - path.start_distance(window.first));
  return ratio * ratio;
}

ObjectiveReport global_objective(const ThermalModel& model, const ObjectiveSpec& spec, const PathSampling& sampling,
                                 bool include_masked, unsigned threads) {
  spec.validate(model.material().initial_temperature);
  const auto& samples = sampling.samples();
  const std::size_t last = model.path().num_segments() - 1;
  const MaxSampling max_sampling = spec.report_sampling();

  ObjectiveReport report;
  report.sample_spacing = sampling.spacing();
  report.num_samples = samples.size();
  report.maxima.assign(samples.size(), {});
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const auto& s = samples[i];
    if (s.alpha == 0 && !include_masked) return;
    report.maxima[i].beam = max_temperature(model, {s.beam_point, 0, last, MaxMethod::exact_sampled}, max_sampling);
    report.maxima[i].secondary =
        max_temperature(model, {s.secondary_point, 0, last, MaxMethod::exact_sampled}, max_sampling);
  });

  report.per_line.resize(model.path().num_lines());
  for (std::size_t l = 0; l < report.per_line.size(); ++l) report.per_line[l].line = l;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.alpha == 0) continue;
    const double r1 = report.maxima[i].secondary - spec.melt_temperature;
    const double r2 = report.maxima[i].beam - spec.surface_temperature;
    report.per_line[s.line].g1 += s.weight * r1 * r1;
    report.per_line[s.line].g2 += s.weight * r2 * r2;
  }
  for (const auto& t : report.per_line) {
    report.f1 += t.g1;
    report.f2 += t.g2;
  }
  report.J = spec.weight_secondary * report.f1 + spec.weight_surface * report.f2;
  return report;
}

HistoryCache::HistoryCache(const ThermalModel* frozen_model, Point3 point, std::size_t first_segment, double step)
    : model_(frozen_model),
      point_(point),
      first_(first_segment),
      origin_(frozen_model->timing().start(first_segment)),
      step_(step) {}

double HistoryCache::node(std::size_t j) {
  while (values_.size() <= j) {
    const double xi = static_cast<double>(values_.size()) * step_;
    values_.push_back(model_->temperature_rise(point_, origin_ + xi * xi, 0, first_ - 1));
  }
  return values_[j];
}

double HistoryCache::operator()(double t) {
  if (first_ == 0) return 0.0;
  const double xi = std::sqrt(std::max(0.0, t - origin_)) / step_;
  const auto j = static_cast<std::size_t>(xi);
  const std::size_t base = j == 0 ? 0 : j - 1;
  const double x = xi - static_cast<double>(base);
  const double f0 = node(base);
  const double f1 = node(base + 1);
  const double f2 = node(base + 2);
  const double f3 = node(base + 3);
  // Cubic Lagrange through nodes 0..3 evaluated at x.
  return f0 * (x - 1) * (x - 2) * (x - 3) / -6.0 + f1 * x * (x - 2) * (x - 3) / 2.0 +
         f2 * x * (x - 1) * (x - 3) / -2.0 + f3 * x * (x - 1) * (x - 2) / 6.0;
}

LocalObjective::LocalObjective(std::shared_ptr<const ScanPath> path, MaterialParams material, ObjectiveSpec spec,
                               std::shared_ptr<const PathSampling> sampling, BeamParameters current, Window window,
                               double jump_dwell, QuadratureOptions quadrature, unsigned threads)
    : path_(std::move(path)),
      material_(material),
      spec_(std::move(spec)),
      sampling_(std::move(sampling)),
      current_(std::move(current)),
      window_(window),
      jump_dwell_(jump_dwell),
      quadrature_(quadrature),
      threads_(threads) {
  spec_.validate(material_.initial_temperature);
  window_.validate(path_->num_segments());
  frozen_ = std::make_unique<ThermalModel>(path_, material_, current_, jump_dwell_, quadrature_);
  const auto& samples = sampling_->samples();
  for (std::size_t i = sampling_->begin(window_.first); i < sampling_->begin(window_.last + 1); ++i) {
    if (samples[i].alpha == 0) continue;
    active_.push_back(i);
    beta_.push_back(beta_weight(*path_, samples[i].segment, window_));
    beam_history_.emplace_back(frozen_.get(), samples[i].beam_point, window_.first);
    secondary_history_.emplace_back(frozen_.get(), samples[i].secondary_point, window_.first);
  }
}

LocalObjective::Terms LocalObjective::evaluate(std::span<const double> spot_size, std::span<const double> speed) const {
  return evaluate_with(spot_size, speed, spec_.window_method);
}

LocalObjective::Terms LocalObjective::evaluate_exact(std::span<const double> spot_size,
                                                     std::span<const double> speed) const {
  return evaluate_with(spot_size, speed, MaxMethod::exact_sampled);
}

LocalObjective::Terms LocalObjective::evaluate_with(std::span<const double> spot_size, std::span<const double> speed,
                                                    MaxMethod method) const {
  const std::size_t m = window_size();
  if (spot_size.size() != m || speed.size() != m) {
    throw ConfigError("window parameters must have " + std::to_string(m) + " entries");
  }
  BeamParameters beam = current_;
  std::copy(spot_size.begin(), spot_size.end(), beam.spot_size.begin() + static_cast<std::ptrdiff_t>(window_.first));
  std::copy(speed.begin(), speed.end(), beam.speed.begin() + static_cast<std::ptrdiff_t>(window_.first));
  const ThermalModel model(path_, material_, std::move(beam), jump_dwell_, quadrature_);

  const MaxSampling sampling = spec_.window_sampling();
  const SampleGrid grid = make_sample_grid(*path_, model.timing(), window_.first, window_.last, sampling.advance);
  const double u0 = material_.initial_temperature;
  const auto& samples = sampling_->samples();

  std::vector<double> r1(active_.size());
  std::vector<double> r2(active_.size());
  parallel_for(active_.size(), threads_, [&](std::size_t a) {
    const auto& s = samples[active_[a]];
    auto window_max = [&](const Point3& x, HistoryCache& history) {
      auto u = [&](double t) { return u0 + history(t) + model.temperature_rise(x, t, window_.first, window_.last); };
      if (method == MaxMethod::exact_sampled) return exact_window_max(u, grid, x, 0.0, sampling.golden_tolerance);
      return smoothed_window_max(u, grid, spec_.smoothing, sampling.reference_length, sampling.refine_subdivisions);
    };
    r1[a] = window_max(s.secondary_point, secondary_history_[a]) - spec_.melt_temperature;
    r2[a] = window_max(s.beam_point, beam_history_[a]) - spec_.surface_temperature;
  });

  Terms terms;
  for (std::size_t a = 0; a < active_.size(); ++a) {
    const double w = samples[active_[a]].weight * beta_[a];
    terms.g1 += w * r1[a] * r1[a];
    terms.g2 += w * r2[a] * r2[a];
  }
  terms.J = spec_.weight_secondary * terms.g1 + spec_.weight_surface * terms.g2;
  return terms;
}

}  // namespace beamopt
