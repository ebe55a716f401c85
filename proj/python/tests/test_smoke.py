import math

import pytest

import beamopt

SMALL = """{
  "path": {"generator": "snake", "lines": 2, "line_length_mm": 1.0,
           "line_offset_mm": 0.2, "segments_per_line": 2},
  "objective": {"margin_mm": 0.1},
  "algorithm": {"window": 2, "freeze": 1, "max_iterations": 2}
}"""


def test_builtin_scenarios_listed():
    names = beamopt.builtin_scenarios()
    assert {"example1", "example2", "example3"} <= set(names)
    assert beamopt.load_scenario("example2").num_segments == 152


def test_scenario_round_trip():
    s = beamopt.load_scenario("example1")
    assert beamopt.parse_scenario(s.to_json()) == s


def test_bad_scenario_raises_value_error():
    with pytest.raises(ValueError):
        beamopt.parse_scenario('{"path": {"generator": "spiral"}}')
    with pytest.raises(beamopt.ConfigError):
        beamopt.load_scenario("no_such_scenario")


def test_stationary_limit():
    path = beamopt.ScanPath([((0.0, 0.0), (1e-7, 0.0))])
    m = beamopt.MaterialParams()
    model = beamopt.ThermalModel(path, m, [2e-4], [1e-10])
    expected = m.power / (2 * math.sqrt(2 * math.pi) * m.conductivity * 2e-4)
    rise = model.temperature(5e-8, 0.0, 0.0, model.total_time) - m.initial_temperature
    assert rise == pytest.approx(expected, rel=5e-3)


def test_temperature_is_linear_in_power():
    path = beamopt.snake_path(2, 1e-3, 2e-4, 2)
    m = beamopt.MaterialParams()
    a = beamopt.ThermalModel(path, m, [2e-4] * 4, [0.5] * 4)
    m.power = 200.0
    b = beamopt.ThermalModel(path, m, [2e-4] * 4, [0.5] * 4)
    t = a.total_time
    ra = a.temperature(5e-4, 1e-4, 0.0, t) - 1000.0
    rb = b.temperature(5e-4, 1e-4, 0.0, t) - 1000.0
    assert rb == pytest.approx(2.0 * ra, rel=1e-9)
    assert a.max_temperature(5e-4, 1e-4, 0.0) >= a.temperature(5e-4, 1e-4, 0.0, t)


def test_paths():
    p = beamopt.annulus_quadrant_path(1e-3, 5e-3, 19, math.radians(5), 8)
    assert p.num_segments == 152
    assert p.num_lines == 19
    assert p.first_segment_of_line(4) == 32
    assert p.total_length == pytest.approx(19 * 4e-3)


def test_evaluate_and_optimize_small_scenario():
    s = beamopt.parse_scenario(SMALL)
    n = s.num_segments
    report = beamopt.evaluate(s, [2e-4] * n, [0.5] * n)
    assert report["J"] == pytest.approx(0.7 * report["f1"] + 0.3 * report["f2"])
    assert len(report["per_line"]) == 2
    result = beamopt.optimize_segmentwise(s)
    assert result["J_init"] == pytest.approx(report["J"])
    assert result["J_opt"] <= result["J_init"]
    assert len(result["speed"]) == n
    with pytest.raises(ValueError):
        beamopt.evaluate(s, [2e-4] * (n - 1), [0.5] * (n - 1))
