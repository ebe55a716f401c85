#include <cmath>
#include <memory>
#include <vector>

#include "beamopt/error.hpp"
#include "beamopt/objective.hpp"
#include "doctest.h"

using namespace beamopt;

namespace {

std::shared_ptr<const ScanPath> snake(std::size_t lines, double length, std::size_t segments) {
  return std::make_shared<const ScanPath>(generators::snake(lines, length, 2e-4, segments));
}

std::shared_ptr<const PathSampling> sampling_for(const ScanPath& path, const ObjectiveSpec& spec) {
  const SecondaryPath secondary(path, spec.secondary);
  return std::make_shared<const PathSampling>(path, secondary, spec.sample_spacing, spec.margin);
}

}  // namespace

TEST_CASE("alpha mask near hatch-line ends") {
  const auto path = snake(5, 5e-3, 10);
  // 0.2 mm into line 1 lies inside the 0.4 mm margin.
  CHECK(alpha_mask(*path, 0, 0.4, 4e-4) == 0);
  CHECK(alpha_mask(*path, 4, 1.0, 4e-4) == 1);
  CHECK(alpha_mask(*path, 9, 0.5, 4e-4) == 0);  // 0.25 mm before the line end
  CHECK(alpha_mask(*path, 10, 0.2, 4e-4) == 0);  // start of line 2
  for (std::size_t k = 0; k < path->num_segments(); ++k) CHECK(alpha_mask(*path, k, 0.0, 0.0) == 1);
}

TEST_CASE("path sampling") {
  const auto path = snake(2, 2e-3, 4);
  ObjectiveSpec spec;
  const auto sampling = sampling_for(*path, spec);
  CHECK(sampling->samples().size() == 80);
  for (std::size_t k = 0; k < path->num_segments(); ++k) {
    double weight = 0.0;
    for (std::size_t i = sampling->begin(k); i < sampling->begin(k + 1); ++i) {
      const auto& s = sampling->samples()[i];
      CHECK(s.segment == k);
      weight += s.weight;
      if (i + 1 < sampling->begin(k + 1)) {
        CHECK(sampling->samples()[i + 1].gamma - s.gamma <= spec.sample_spacing * (1 + 1e-12));
      }
      CHECK(s.secondary_point.z == doctest::Approx(-spec.secondary.depth));
    }
    CHECK(weight == doctest::Approx(path->segment(k).length).epsilon(1e-12));
  }
  CHECK_THROWS_AS(PathSampling(*path, SecondaryPath(*path, spec.secondary), 0.0, 0.0), ConfigError);
}

TEST_CASE("beta window weights") {
  const auto path = snake(1, 5e-3, 10);
  const Window w{0, 4, 1};
  const double expected[] = {1.0, 0.64, 0.36, 0.16, 0.04};
  for (std::size_t k = 0; k < 5; ++k) CHECK(beta_weight(*path, k, w) == doctest::Approx(expected[k]).epsilon(1e-12));

  const Window all{2, 6, 5};
  for (std::size_t k = 2; k <= 6; ++k) CHECK(beta_weight(*path, k, all) == 1.0);

  const Window two{3, 8, 2};
  double previous = 2.0;
  for (std::size_t k = 3; k <= 8; ++k) {
    const double b = beta_weight(*path, k, two);
    CHECK(b <= previous);
    previous = b;
  }
  CHECK(beta_weight(*path, 4, two) == 1.0);
  CHECK_THROWS_AS(beta_weight(*path, 9, w), ConfigError);
  CHECK_THROWS_AS(Window({4, 2, 1}).validate(10), ConfigError);
  CHECK_THROWS_AS(Window({0, 2, 4}).validate(10), ConfigError);
  CHECK_THROWS_AS(Window({0, 2, 0}).validate(10), ConfigError);
}

TEST_CASE("objective spec invariants") {
  ObjectiveSpec spec;
  CHECK_NOTHROW(spec.validate(1000.0));
  spec.weight_secondary = 0.0;
  spec.weight_surface = 0.0;
  CHECK_THROWS_AS(spec.validate(1000.0), ConfigError);
  spec = {};
  spec.surface_temperature = 1700.0;
  CHECK_THROWS_AS(spec.validate(1000.0), ConfigError);
  spec = {};
  CHECK_THROWS_AS(spec.validate(1900.0), ConfigError);
  spec = {};
  spec.sample_spacing = 0.0;
  CHECK_THROWS_AS(spec.validate(1000.0), ConfigError);
}

TEST_CASE("local objective") {
  const auto path = snake(2, 2e-3, 4);
  ObjectiveSpec spec;
  const auto beam = BeamParameters::uniform(8, 2e-4, 0.5);
  const std::vector<double> s(3, 2e-4);
  const std::vector<double> v(3, 0.5);

  SUBCASE("fully masked window is zero") {
    ObjectiveSpec masked = spec;
    masked.margin = 3e-3;
    const LocalObjective local(path, MaterialParams{}, masked, sampling_for(*path, masked), beam, {1, 3, 1});
    CHECK(local(s, v) == 0.0);
  }

  SUBCASE("residuals are quadratic in the reference temperature") {
    const auto sampling = sampling_for(*path, spec);
    const Window window{1, 3, 1};
    double mass = 0.0;  // sum of weight * beta * alpha
    for (std::size_t i = sampling->begin(1); i < sampling->begin(4); ++i) {
      const auto& smp = sampling->samples()[i];
      mass += smp.weight * smp.alpha * beta_weight(*path, smp.segment, window);
    }
    const double delta = 25.0;
    double g1[3];
    for (int j = 0; j < 3; ++j) {
      ObjectiveSpec shifted = spec;
      shifted.melt_temperature += (j - 1) * delta;
      const LocalObjective local(path, MaterialParams{}, shifted, sampling, beam, window);
      g1[j] = local.evaluate(s, v).g1;
    }
    CHECK(g1[0] + g1[2] - 2.0 * g1[1] == doctest::Approx(2.0 * delta * delta * mass).epsilon(1e-9));
  }

  SUBCASE("window over the whole path with beta = 1 matches the global objective") {
    const auto sampling = sampling_for(*path, spec);
    const std::vector<double> s8(8, 2e-4);
    const std::vector<double> v8(8, 0.5);
    const LocalObjective local(path, MaterialParams{}, spec, sampling, beam, {0, 7, 8});
    const ThermalModel model(path, MaterialParams{}, beam);
    const auto report = global_objective(model, spec, *sampling);
    const auto terms = local.evaluate_exact(s8, v8);
    CHECK(terms.J == doctest::Approx(report.J).epsilon(1e-6));
    CHECK(terms.g1 == doctest::Approx(report.f1).epsilon(1e-6));
    // The smoothed relaxation stays close.
    CHECK(std::abs(local(s8, v8) - report.J) < 0.1 * report.J);
  }

  SUBCASE("evaluation is deterministic and nonnegative") {
    const LocalObjective local(path, MaterialParams{}, spec, sampling_for(*path, spec), beam, {2, 4, 1});
    const auto a = local.evaluate(s, v);
    const auto b = local.evaluate(s, v);
    CHECK(a.J == b.J);
    CHECK(a.J >= 0.0);
    CHECK(a.J == doctest::Approx(spec.weight_secondary * a.g1 + spec.weight_surface * a.g2));
    CHECK_THROWS_AS(local(std::vector<double>(2, 2e-4), v), ConfigError);
  }
}

TEST_CASE("history cache interpolates frozen contributions") {
  const auto path = snake(2, 2e-3, 4);
  const ThermalModel model(path, MaterialParams{}, BeamParameters::uniform(8, 2e-4, 0.5));
  const Point3 x = path->point_at(5, 0.5);
  HistoryCache cache(&model, x, 4);
  for (double t = model.timing().start(4); t < model.timing().end(7); t += 3.1e-5) {
    CHECK(std::abs(cache(t) - model.temperature_rise(x, t, 0, 3)) < 5e-3);
  }
  HistoryCache none(&model, x, 0);
  CHECK(none(1e-3) == 0.0);
}

TEST_CASE("global objective") {
  const auto path = snake(2, 2e-3, 4);
  ObjectiveSpec spec;
  const ThermalModel model(path, MaterialParams{}, BeamParameters::uniform(8, 2e-4, 0.5));

  const auto report = global_objective(model, spec, *sampling_for(*path, spec));
  CHECK(report.J > 0.0);
  CHECK(report.J == doctest::Approx(spec.weight_secondary * report.f1 + spec.weight_surface * report.f2));
  double g1 = 0.0;
  for (const auto& line : report.per_line) g1 += line.g1;
  CHECK(g1 == doctest::Approx(report.f1));
  CHECK(report.per_line.size() == 2);

  SUBCASE("weights select the tracked term") {
    ObjectiveSpec only_secondary = spec;
    only_secondary.weight_secondary = 1.0;
    only_secondary.weight_surface = 0.0;
    const auto r = global_objective(model, only_secondary, *sampling_for(*path, only_secondary));
    CHECK(r.J == doctest::Approx(r.f1));
    CHECK(r.f2 == doctest::Approx(report.f2));
  }

  SUBCASE("halving the sample spacing changes f1 and f2 by less than the declared tolerance") {
    ObjectiveSpec fine = spec;
    fine.sample_spacing = spec.sample_spacing / 2.0;
    const auto r = global_objective(model, fine, *sampling_for(*path, fine));
    CHECK(std::abs(r.f1 - report.f1) < spec.discretization_tolerance * report.f1);
    CHECK(std::abs(r.f2 - report.f2) < spec.discretization_tolerance * report.f2);
  }

  SUBCASE("thread count does not change the result") {
    const auto r = global_objective(model, spec, *sampling_for(*path, spec), false, 3);
    CHECK(r.J == report.J);
  }
}
