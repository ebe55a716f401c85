#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "beamopt/error.hpp"
#include "beamopt/thermal.hpp"
#include "beamopt/window_max.hpp"
#include "doctest.h"

using namespace beamopt;

namespace {

std::shared_ptr<const ScanPath> single_segment(double length = 1e-3) {
  const std::vector<SegmentEndpoints> e{{{0, 0, 0}, {length, 0, 0}}};
  return std::make_shared<const ScanPath>(e);
}

// (0,0) -> (1 mm, 0) at 0.5 m/s, sigma 0.2 mm; then (1 mm, 0) -> (1 mm, 0.5 mm)
// at 0.25 m/s, sigma 0.1 mm.
std::shared_ptr<const ScanPath> l_shape() {
  const std::vector<SegmentEndpoints> e{{{0, 0, 0}, {1e-3, 0, 0}}, {{1e-3, 0, 0}, {1e-3, 5e-4, 0}}};
  return std::make_shared<const ScanPath>(e);
}

}  // namespace

// Reference values from a direct quadrature of the tau-integral in the
// original variable (no substitution, independent code), Table 1 material.
TEST_CASE("kernel matches independent reference quadrature") {
  const ThermalModel model(single_segment(), MaterialParams{}, BeamParameters::uniform(1, 2e-4, 0.5));
  const double tf = 2e-3;
  struct Case {
    Point3 x;
    double dT;
  };
  const Case cases[] = {{{1e-3, 0, 0}, 1376.6067660009617},       {{1e-3, 1e-4, -5e-5}, 568.8702684350458},
                        {{5e-4, 0, 0}, 935.6432250832813},        {{5e-4, 0, -1e-4}, 596.0290297175951},
                        {{5e-4, 0, -2e-4}, 225.77385483315334},   {{3e-4, 2e-4, 0}, 466.7319978692451}};
  for (const auto& c : cases) {
    CHECK(model.temperature(c.x, tf) - 1000.0 == doctest::Approx(c.dT).epsilon(1e-6));
  }

  const ThermalModel two(l_shape(), MaterialParams{}, BeamParameters{{2e-4, 1e-4}, {0.5, 0.25}});
  const double t2 = 4e-3;
  CHECK(two.temperature({1e-3, 2.5e-4, 0}, t2) - 1000.0 == doctest::Approx(2793.3204315716503).epsilon(1e-6));
  CHECK(two.temperature({8e-4, 1e-4, -5e-5}, t2) - 1000.0 == doctest::Approx(951.3574388601676).epsilon(1e-6));
  CHECK(two.temperature({1e-3, 5e-4, 0}, t2) - 1000.0 == doctest::Approx(5144.146160498902).epsilon(1e-6));
}

TEST_CASE("stationary limit of a long dwell") {
  // A 0.1 um segment traversed in 1000 s is a stationary source.
  const double sigma = 2e-4;
  const ThermalModel model(single_segment(1e-7), MaterialParams{}, BeamParameters::uniform(1, sigma, 1e-10));
  const double expected = 100.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi) * 20.0 * sigma);
  CHECK(expected == doctest::Approx(4987.0).epsilon(1e-3));
  const double dT = model.temperature({5e-8, 0, 0}, model.timing().total_time()) - 1000.0;
  CHECK(std::abs(dT - expected) / expected < 5e-3);
  CHECK(dT < expected);
}

TEST_CASE("temperature basics") {
  const ThermalModel model(single_segment(), MaterialParams{}, BeamParameters::uniform(1, 2e-4, 0.5));
  CHECK(model.temperature({0, 0, 0}, 0.0) == 1000.0);
  CHECK(model.segment_contribution({0, 0, 0}, 0.0, 0) == 0.0);
  CHECK(model.temperature({0.06, 0.0, 0}, 2e-3) == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK_THROWS_AS(model.temperature({0, 0, 0}, 1.0), ConfigError);
  CHECK_THROWS_AS(model.temperature({0, 0, 1e-6}, 1e-3), ConfigError);
}

TEST_CASE("linearity in power") {
  MaterialParams doubled;
  doubled.power = 250.0;
  const auto path = l_shape();
  const BeamParameters beam{{2e-4, 1e-4}, {0.5, 0.25}};
  const ThermalModel a(path, MaterialParams{}, beam);
  const ThermalModel b(path, doubled, beam);
  for (const Point3 x : {Point3{1e-3, 2.5e-4, 0}, Point3{5e-4, 1e-4, -1e-4}, Point3{2e-4, -3e-4, 0}}) {
    for (double t : {1e-3, 2.5e-3, 4e-3}) {
      const double da = a.temperature(x, t) - 1000.0;
      const double db = b.temperature(x, t) - 1000.0;
      CHECK(std::abs(db - 2.5 * da) <= 1e-9 * std::abs(db));
    }
  }
}

TEST_CASE("monotone decay with depth") {
  const ThermalModel model(l_shape(), MaterialParams{}, BeamParameters{{2e-4, 1e-4}, {0.5, 0.25}});
  for (double t : {1e-3, 2e-3, 3.5e-3}) {
    double previous = model.temperature({7e-4, 5e-5, 0}, t);
    for (double z = 2.5e-5; z <= 5e-4; z += 2.5e-5) {
      const double u = model.temperature({7e-4, 5e-5, -z}, t);
      CHECK(u <= previous + 1e-9);
      previous = u;
    }
  }
}

TEST_CASE("splitting a straight segment leaves the field unchanged") {
  const ThermalModel whole(single_segment(), MaterialParams{}, BeamParameters::uniform(1, 2e-4, 0.5));
  const std::vector<SegmentEndpoints> halves{{{0, 0, 0}, {5e-4, 0, 0}}, {{5e-4, 0, 0}, {1e-3, 0, 0}}};
  const ThermalModel split(std::make_shared<const ScanPath>(halves), MaterialParams{},
                           BeamParameters::uniform(2, 2e-4, 0.5));
  for (const Point3 x : {Point3{1e-3, 0, 0}, Point3{5e-4, 1e-4, -5e-5}, Point3{2e-4, 0, 0}, Point3{5e-4, 0, 0}}) {
    for (double t : {7e-4, 1e-3, 1.3e-3, 2e-3}) {
      const double a = whole.temperature(x, t) - 1000.0;
      const double b = split.temperature(x, t) - 1000.0;
      CHECK(std::abs(a - b) <= 2e-7 * std::abs(a) + 2e-9);
    }
  }
}

TEST_CASE("continuity across a segment end") {
  const ThermalModel model(l_shape(), MaterialParams{}, BeamParameters{{2e-4, 1e-4}, {0.5, 0.25}});
  const double tf = model.timing().end(0);
  const Point3 x{9e-4, 5e-5, -2e-5};
  const double before = model.temperature(x, tf * (1 - 1e-9));
  const double after = model.temperature(x, tf * (1 + 1e-9));
  CHECK(after == doctest::Approx(before).epsilon(1e-6));
}

TEST_CASE("culling bound is conservative") {
  const ThermalModel model(l_shape(), MaterialParams{}, BeamParameters{{2e-4, 1e-4}, {0.5, 0.25}});
  for (const Point3 x : {Point3{1e-3, 2.5e-4, 0}, Point3{3e-3, 0, 0}, Point3{0, 1e-3, -1e-4}}) {
    for (double t : {1e-3, 3e-3, 4e-3}) {
      for (std::size_t k = 0; k < 2; ++k) CHECK(model.segment_contribution(x, t, k) <= model.contribution_bound(x, t, k));
    }
  }
}

TEST_CASE("mirror symmetry across the segment axis") {
  const ThermalModel model(single_segment(), MaterialParams{}, BeamParameters::uniform(1, 2e-4, 0.5));
  const std::vector<Point3> grid{{5e-4, 1.5e-4, 0}, {5e-4, -1.5e-4, 0}};
  const auto values = field_on_grid(model, grid, {TimeSpec::Kind::snapshot, 1.5e-3});
  CHECK(values[0] == doctest::Approx(values[1]).epsilon(1e-9));
  const std::vector<Point3> origin{{0, 0, 0}};
  CHECK(field_on_grid(model, origin, {TimeSpec::Kind::snapshot, 0.0})[0] == 1000.0);
  CHECK_THROWS_AS(field_on_grid(model, std::vector<Point3>{}, {}), ConfigError);
}

TEST_CASE("maximum temperature over a window") {
  const std::vector<SegmentEndpoints> e{{{0, 0, 0}, {2.5e-3, 0, 0}}, {{2.5e-3, 0, 0}, {5e-3, 0, 0}}};
  const auto path = std::make_shared<const ScanPath>(e);
  const ThermalModel model(path, MaterialParams{}, BeamParameters::uniform(2, 2e-4, 0.5));
  const Point3 x{2.5e-3, 0, 0};

  const double exact = max_temperature(model, {x, 0, 1, MaxMethod::exact_sampled});
  for (double t = 1e-5; t < model.timing().total_time(); t += 1.3e-4) CHECK(exact >= model.temperature(x, t) - 1e-9);

  SUBCASE("smoothed maximum stays within 5 K of the exact maximum on a surface pass") {
    for (const Point3 p : {x, Point3{1.2e-3, 0, 0}, Point3{3.7e-3, 5e-5, 0}}) {
      const double ex = max_temperature(model, {p, 0, 1, MaxMethod::exact_sampled});
      const double sm = max_temperature(model, {p, 0, 1, MaxMethod::smoothed, 0.1});
      CHECK(std::abs(sm - ex) < 5.0);
    }
  }
  SUBCASE("no heating in the window gives u_init") {
    const double far = max_temperature(model, {{0.2, 0.2, 0}, 0, 1, MaxMethod::exact_sampled});
    CHECK(far == doctest::Approx(1000.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(max_temperature(model, {x, 1, 0, MaxMethod::exact_sampled}), ConfigError);
  CHECK_THROWS_AS(max_temperature(model, {x, 0, 2, MaxMethod::exact_sampled}), ConfigError);
  CHECK_THROWS_AS(max_temperature(model, {x, 0, 1, MaxMethod::smoothed, 0.0}), ConfigError);
}

TEST_CASE("shifted log-sum-exp") {
  const std::vector<double> values{1000.0, 2000.0, 1999.0};
  const std::vector<double> weights{1.0, 1.0, 1.0};
  const double expected = 2000.0 + std::log(std::exp(-100.0) + 1.0 + std::exp(-0.1)) / 0.1;
  CHECK(smoothed_max(values, weights, 0.1) == doctest::Approx(expected).epsilon(1e-14));
  const std::vector<double> huge{1e6, 1e6};
  CHECK(std::isfinite(smoothed_max(huge, std::span<const double>(weights).subspan(0, 2), 10.0)));
  CHECK_THROWS_AS(smoothed_max(values, weights, 0.0), ConfigError);
}

TEST_CASE("golden-section search finds an interior maximum") {
  auto f = [](double t) { return -(t - 0.3) * (t - 0.3); };
  CHECK(golden_maximum(f, 0.0, 1.0, -1.0, 1e-12) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("invalid parameters are rejected") {
  MaterialParams bad;
  bad.conductivity = 0.0;
  CHECK_THROWS_AS(ThermalModel(single_segment(), bad, BeamParameters::uniform(1, 2e-4, 0.5)), ConfigError);
  CHECK_THROWS_AS(ThermalModel(single_segment(), MaterialParams{}, BeamParameters::uniform(1, -1.0, 0.5)), ConfigError);
  CHECK_THROWS_AS(ThermalModel(single_segment(), MaterialParams{}, BeamParameters::uniform(2, 2e-4, 0.5)), ConfigError);
  CHECK(MaterialParams{}.volumetric_heat_capacity() == 20.0 / 8.45e-6);
}
