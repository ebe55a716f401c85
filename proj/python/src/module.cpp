#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <vector>

#include "beamopt/error.hpp"
#include "beamopt/optimize.hpp"
#include "beamopt/scenario.hpp"

namespace py = pybind11;
using namespace beamopt;

namespace {

using PathPtr = std::shared_ptr<ScanPath>;

PathPtr make_path(const std::vector<SegmentEndpoints>& e) { return std::make_shared<ScanPath>(e); }

py::dict report_dict(const ObjectiveReport& r) {
  py::list lines;
  for (const auto& l : r.per_line) {
    py::dict d;
    d["line"] = l.line + 1;
    d["g1"] = l.g1;
    d["g2"] = l.g2;
    lines.append(d);
  }
  py::dict d;
  d["J"] = r.J;
  d["f1"] = r.f1;
  d["f2"] = r.f2;
  d["per_line"] = lines;
  d["h_mm"] = r.sample_spacing * 1e3;
  d["n_samples"] = r.num_samples;
  return d;
}

}  // namespace

PYBIND11_MODULE(_beamopt, m) {
  m.doc() = "Beam spot size and speed optimization for powder-bed fusion (SI units).";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<MaterialParams>(m, "MaterialParams")
      .def(py::init<>())
      .def_readwrite("conductivity", &MaterialParams::conductivity)
      .def_readwrite("diffusivity", &MaterialParams::diffusivity)
      .def_readwrite("initial_temperature", &MaterialParams::initial_temperature)
      .def_readwrite("power", &MaterialParams::power);

  py::class_<ScanPath, PathPtr>(m, "ScanPath")
      .def(py::init([](const std::vector<std::pair<std::array<double, 2>, std::array<double, 2>>>& segments) {
             std::vector<SegmentEndpoints> e;
             for (const auto& [a, b] : segments) e.push_back({{a[0], a[1], 0.0}, {b[0], b[1], 0.0}});
             return make_path(e);
           }),
           py::arg("segments"), "Segments [((x_i, y_i), (x_f, y_f)), ...] in metres.")
      .def_property_readonly("num_segments", &ScanPath::num_segments)
      .def_property_readonly("num_lines", &ScanPath::num_lines)
      .def_property_readonly("total_length", &ScanPath::total_length)
      .def("start_distance", &ScanPath::start_distance)
      .def("line_of_segment", &ScanPath::line_of_segment)
      .def("first_segment_of_line", &ScanPath::first_segment_of_line);

  m.def(
      "snake_path",
      [](std::size_t lines, double length, double offset, std::size_t per_line) {
        return make_path(generators::snake(lines, length, offset, per_line));
      },
      py::arg("lines"), py::arg("line_length"), py::arg("line_offset"), py::arg("segments_per_line"));
  m.def(
      "annulus_quadrant_path",
      [](double r_inner, double r_outer, std::size_t n_lines, double delta, std::size_t per_line, bool inward) {
        return make_path(generators::annulus_quadrant(r_inner, r_outer, n_lines, delta, per_line, inward));
      },
      py::arg("r_inner"), py::arg("r_outer"), py::arg("n_lines"), py::arg("delta_angle_rad"),
      py::arg("segments_per_line"), py::arg("inward") = true);

  py::class_<ThermalModel>(m, "ThermalModel")
      .def(py::init([](PathPtr path, const MaterialParams& material, std::vector<double> spot,
                       std::vector<double> speed, double jump_dwell) {
             return ThermalModel(std::move(path), material, BeamParameters{std::move(spot), std::move(speed)},
                                 jump_dwell);
           }),
           py::arg("path"), py::arg("material"), py::arg("spot_size"), py::arg("speed"), py::arg("jump_dwell") = 0.0)
      .def_property_readonly("total_time", [](const ThermalModel& t) { return t.timing().total_time(); })
      .def(
          "temperature", [](const ThermalModel& t, double x, double y, double z, double time) {
            return t.temperature({x, y, z}, time);
          },
          py::arg("x"), py::arg("y"), py::arg("z"), py::arg("t"))
      .def(
          "max_temperature",
          [](const ThermalModel& t, double x, double y, double z) {
            const std::vector<Point3> p{{x, y, z}};
            return field_on_grid(t, p, {})[0];
          },
          py::arg("x"), py::arg("y"), py::arg("z"));

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("name", &Scenario::name)
      .def("to_json", &dump_scenario)
      .def("__eq__", [](const Scenario& a, const Scenario& b) { return a == b; })
      .def_property_readonly("num_segments",
                             [](const Scenario& s) { return make_problem(s).path->num_segments(); });

  m.def("load_scenario", &load_scenario, py::arg("file_or_builtin"));
  m.def(
      "parse_scenario", [](const std::string& text) { return parse_scenario(text); }, py::arg("json_text"));
  m.def("builtin_scenarios", &builtin_scenarios);

  m.def(
      "evaluate",
      [](const Scenario& s, std::vector<double> spot, std::vector<double> speed, unsigned threads) {
        const Problem p = make_problem(s, threads);
        const BeamParameters beam{std::move(spot), std::move(speed)};
        p.bounds.check(beam);
        py::gil_scoped_release release;
        const ObjectiveReport r = p.evaluate(beam);
        py::gil_scoped_acquire acquire;
        return report_dict(r);
      },
      py::arg("scenario"), py::arg("spot_size"), py::arg("speed"), py::arg("threads") = 1,
      "Objective report for per-segment spot sizes (m) and speeds (m/s).");

  m.def(
      "optimize_segmentwise",
      [](const Scenario& s, unsigned threads) {
        const Problem p = make_problem(s, threads);
        GreedyResult r;
        {
          py::gil_scoped_release release;
          r = greedy_segmentwise(p, WindowSchedule::constant(s.algorithm.window, s.algorithm.freeze),
                                 initial_beam(s, p.path->num_segments()), solver_options(s));
        }
        py::dict d;
        d["J_init"] = r.J_init;
        d["J_opt"] = r.J_opt;
        d["spot_size"] = r.beam.spot_size;
        d["speed"] = r.beam.speed;
        d["windows"] = r.trace.size();
        d["aborted"] = r.any_aborted;
        return d;
      },
      py::arg("scenario"), py::arg("threads") = 1);
}
