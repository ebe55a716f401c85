"""Beam spot size and speed optimization for powder-bed fusion.

The functions work in SI units; scenario files use millimetres and mm/s.
"""

import os
from pathlib import Path

_scenarios = Path(__file__).with_name("scenarios")
if _scenarios.is_dir():
    os.environ.setdefault("BEAMOPT_SCENARIO_DIR", str(_scenarios))

from ._beamopt import (  # noqa: E402
    ConfigError,
    MaterialParams,
    Scenario,
    ScanPath,
    SolverError,
    ThermalModel,
    annulus_quadrant_path,
    builtin_scenarios,
    evaluate,
    load_scenario,
    optimize_segmentwise,
    parse_scenario,
    snake_path,
)

__all__ = [
    "ConfigError",
    "MaterialParams",
    "Scenario",
    "ScanPath",
    "SolverError",
    "ThermalModel",
    "annulus_quadrant_path",
    "builtin_scenarios",
    "evaluate",
    "load_scenario",
    "optimize_segmentwise",
    "parse_scenario",
    "snake_path",
]
