#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "beamopt/error.hpp"
#include "beamopt/scenario.hpp"
#include "doctest.h"

using namespace beamopt;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "beamopt_unit_scenario";
  fs::create_directories(dir);
  return dir;
}

const char* kMinimal = R"({"path": {"generator": "snake", "lines": 2, "line_length_mm": 2.0,
                                      "line_offset_mm": 0.2, "segments_per_line": 4}})";

}  // namespace

TEST_CASE("built-in scenarios load with the expected geometry") {
  const auto names = builtin_scenarios();
  CHECK(std::find(names.begin(), names.end(), "example1") != names.end());

  const Problem e1 = make_problem(load_scenario("example1"));
  CHECK(e1.path->num_segments() == 50);
  CHECK(e1.path->num_lines() == 5);
  CHECK(e1.material.diffusivity == doctest::Approx(8.45e-6));
  CHECK(e1.objective.margin == doctest::Approx(4e-4));
  CHECK(e1.bounds.speed_max == doctest::Approx(10.0));

  const Scenario s2 = load_scenario("example2");
  const Problem e2 = make_problem(s2);
  CHECK(e2.path->num_segments() == 152);
  CHECK(e2.path->num_lines() == 19);
  CHECK(s2.algorithm.optimize_lines == 5);
  CHECK(e2.objective.secondary.mode == OffsetMode::normal_offset);

  CHECK(load_scenario("example3").algorithm.kind == "linewise");
  CHECK_THROWS_AS(load_scenario("example9"), ConfigError);
}

TEST_CASE("scenario round trip is exact") {
  for (const char* name : {"example1", "example2", "example3"}) {
    const Scenario a = load_scenario(name);
    const Scenario b = parse_scenario(dump_scenario(a), a.base_directory);
    CHECK(a == b);
    CHECK(dump_scenario(b) == dump_scenario(a));
  }
  // Arbitrary decimal values survive load -> save -> load unchanged.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 0.9);
  for (int i = 0; i < 20; ++i) {
    Scenario s = parse_scenario(kMinimal);
    s.margin_mm = u(rng) * 0.5;
    s.secondary_width_mm = u(rng);
    s.algorithm.initial_spot_mm = u(rng);
    const fs::path file = scratch_dir() / "round_trip.json";
    save_scenario(s, file);
    const Scenario back = load_scenario(file.string());
    CHECK(back == s);
  }
}

TEST_CASE("malformed scenarios are rejected") {
  CHECK_THROWS_AS(parse_scenario("{"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("{}"), ConfigError);
  CHECK_THROWS_AS(parse_scenario(R"({"path": {"generator": "spiral"}})"), ConfigError);
  CHECK_THROWS_AS(parse_scenario(R"({"path": {"generator": "snake", "lines": 2}})"), ConfigError);

  auto with = [](const std::string& extra) {
    std::string text = kMinimal;
    text.insert(text.rfind('}'), ", " + extra);
    return text;
  };
  CHECK_NOTHROW(parse_scenario(with(R"("jump_dwell_s": 0.001)")));
  CHECK_THROWS_AS(parse_scenario(with(R"("jump_dwel_s": 0.001)")), ConfigError);
  CHECK_THROWS_AS(parse_scenario(with(R"("objective": {"margin": 0.4})")), ConfigError);
  CHECK_THROWS_AS(parse_scenario(with(R"("material": {"power_W": -1})")), ConfigError);
  CHECK_THROWS_AS(parse_scenario(with(R"("bounds": {"spot_mm": [1.0, 0.01]})")), ConfigError);
  CHECK_THROWS_AS(parse_scenario(with(R"("algorithm": {"kind": "annealing"})")), ConfigError);
  CHECK_THROWS_AS(parse_scenario(with(R"("algorithm": {"window": 2, "freeze": 3})")), ConfigError);
  CHECK_THROWS_AS(parse_scenario(with(R"("algorithm": {"window": -2})")), ConfigError);
  CHECK_THROWS_AS(parse_scenario(with(R"("algorithm": {"initial_spot_mm": 5.0})")), ConfigError);
  CHECK_THROWS_AS(parse_scenario(with(R"("algorithm": {"optimize_lines": 3})")), ConfigError);
  CHECK_THROWS_AS(parse_scenario(with(R"("outputs": {"surface_grid": {"x_mm": [0, 1], "y_mm": [0, 1]}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_scenario(with(R"("objective": {"secondary": {"mode": "sideways"}})")), ConfigError);
}

TEST_CASE("path files and explicit segments") {
  const fs::path dir = scratch_dir();
  {
    std::ofstream out(dir / "l_path.json");
    out << R"({"segments": [[[0, 0], [1, 0]], [[1, 0], [1, 0.5]]]})";
  }
  {
    std::ofstream out(dir / "uses_file.json");
    out << R"({"path": {"generator": "file", "file": "l_path.json"}, "margin_mm": 0.1})";
  }
  // "margin_mm" belongs under "objective".
  CHECK_THROWS_AS(load_scenario((dir / "uses_file.json").string()), ConfigError);
  {
    std::ofstream out(dir / "uses_file.json");
    out << R"({"path": {"generator": "file", "file": "l_path.json"}, "objective": {"margin_mm": 0.1}})";
  }
  const Scenario s = load_scenario((dir / "uses_file.json").string());
  const Problem p = make_problem(s);
  REQUIRE(p.path->num_segments() == 2);
  CHECK(p.path->num_lines() == 2);
  CHECK(p.path->segment(1).end.y == doctest::Approx(5e-4));

  const auto e = load_path_file(dir / "l_path.json");
  CHECK(e.size() == 2);
  CHECK_THROWS_AS(load_path_file(dir / "missing.json"), ConfigError);

  const Scenario inline_path = parse_scenario(R"({"path": {"segments": [[[0, 0], [2, 0]]]}})");
  CHECK(inline_path.path.generator == "segments");
  CHECK(make_problem(inline_path).path->total_length() == doctest::Approx(2e-3));
}

TEST_CASE("decision tables round trip in mm and mm/s") {
  const Scenario s = parse_scenario(kMinimal);
  const Problem p = make_problem(s);
  BeamParameters beam = BeamParameters::uniform(8, 2e-4, 0.5);
  for (std::size_t k = 0; k < 8; ++k) {
    beam.spot_size[k] = 1e-4 + 3.3e-6 * static_cast<double>(k);
    beam.speed[k] = 0.1 / 3.0 + 0.7 * static_cast<double>(k);
  }
  const fs::path file = scratch_dir() / "table.csv";
  write_decision_table(file, *p.path, beam);
  std::ifstream in(file);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "k,gamma_i_mm,sigma_mm,v_mm_s");
  CHECK(first.rfind("1,0,0.1", 0) == 0);

  const BeamParameters back = read_decision_table(file, 8);
  for (std::size_t k = 0; k < 8; ++k) {
    CHECK(back.spot_size[k] == doctest::Approx(beam.spot_size[k]).epsilon(1e-15));
    CHECK(back.speed[k] == doctest::Approx(beam.speed[k]).epsilon(1e-15));
  }
  CHECK_THROWS_AS(read_decision_table(file, 9), ConfigError);
  {
    std::ofstream out(file);
    out << "k,gamma_i_mm,sigma_mm,v_mm_s\n1,0,0.2,abc\n";
  }
  CHECK_THROWS_AS(read_decision_table(file, 1), ConfigError);
}
