"""End-to-end checks of the beamopt command-line tool on a small scenario.

Usage: cli_smoke.py <path to beamopt binary>
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

BINARY = sys.argv[1]

SMALL = {
    "name": "small",
    "path": {"generator": "snake", "lines": 2, "line_length_mm": 1.0,
             "line_offset_mm": 0.2, "segments_per_line": 3},
    "objective": {"margin_mm": 0.1},
    "algorithm": {"window": 2, "freeze": 1, "max_iterations": 3},
    "outputs": {"profiles": True,
                "surface_grid": {"x_mm": [0.0, 1.0], "y_mm": [0.0, 0.2], "step_mm": 0.1}},
}


def run(*args):
    return subprocess.run([BINARY, *args], capture_output=True, text=True)


def check(condition, message):
    if not condition:
        print("FAILED:", message)
        sys.exit(1)
    print("ok:", message)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        scenario = tmp / "small.json"
        scenario.write_text(json.dumps(SMALL))

        check(run("simulate", "--scenario", "no_such_scenario").returncode == 2, "unknown scenario exits 2")
        check(run("evaluate", "--scenario", str(scenario)).returncode == 2, "missing --table exits 2")
        bad = dict(SMALL, objective={"margin": 0.1})
        (tmp / "bad.json").write_text(json.dumps(bad))
        check(run("simulate", "--scenario", str(tmp / "bad.json")).returncode == 2, "unknown key exits 2")

        out = tmp / "run"
        r = run("optimize", "--scenario", str(scenario), "--out", str(out), "--threads", "2", "--seedless")
        check(r.returncode == 0, "optimize exits 0")
        summary = json.loads((out / "summary.json").read_text())
        check(summary["J_opt"] <= summary["J_init"], "J_opt <= J_init")
        trace = (out / "trace.csv").read_text().splitlines()
        check(len(trace) == 1 + 6, "one trace row per window")
        table = (out / "decision_table.csv").read_text().splitlines()
        check(table[0] == "k,gamma_i_mm,sigma_mm,v_mm_s" and len(table) == 7, "decision table has 6 rows")

        r = run("evaluate", "--scenario", str(scenario), "--table", str(out / "decision_table.csv"))
        check(r.returncode == 0, "evaluate exits 0")
        report = json.loads(r.stdout)
        check(abs(report["J"] - summary["J_opt"]) <= 1e-6 * summary["J_opt"], "evaluate reproduces J_opt")

        initial = ["k,gamma_i_mm,sigma_mm,v_mm_s"] + [f"{k + 1},0,0.2,500" for k in range(6)]
        (tmp / "initial.csv").write_text("\n".join(initial) + "\n")
        report = json.loads(run("evaluate", "--scenario", str(scenario), "--table", str(tmp / "initial.csv")).stdout)
        check(abs(report["J"] - summary["J_init"]) <= 1e-9 * summary["J_init"], "evaluate(initial) = J_init")

        weighted = dict(SMALL, objective={"margin_mm": 0.1, "weight_secondary": 1.0, "weight_surface": 0.0})
        (tmp / "weighted.json").write_text(json.dumps(weighted))
        report = json.loads(run("evaluate", "--scenario", str(tmp / "weighted.json"),
                                "--table", str(tmp / "initial.csv")).stdout)
        check(report["J"] == report["f1"] and report["f2"] > 0, "W1 = 1, W2 = 0 gives J = f1 with f2 listed")

        short = "\n".join(initial[:-1]) + "\n"
        (tmp / "short.csv").write_text(short)
        check(run("evaluate", "--scenario", str(scenario), "--table", str(tmp / "short.csv")).returncode == 2,
              "table of the wrong size exits 2")

        sim = tmp / "sim"
        r = run("simulate", "--scenario", str(scenario), "--out", str(sim))
        check(r.returncode == 0, "simulate exits 0")
        grid = (sim / "surface_max.csv").read_text().splitlines()
        check(grid[0] == "x_mm,y_mm,z_mm,value_K" and len(grid) == 1 + 11 * 3, "surface grid CSV")
        profile = (sim / "profile_secondary.csv").read_text().splitlines()
        check(profile[0] == "gamma_mm,M_K,alpha" and len(profile) == 1 + 6 * 7, "secondary profile CSV, 7 samples per 1/3 mm segment")
        check(not (sim / "cross_section_max.csv").exists(), "no cross-section without a plane spec")

        first = (sim / "surface_max.csv").read_text()
        run("simulate", "--scenario", str(scenario), "--out", str(sim), "--threads", "3")
        check((sim / "surface_max.csv").read_text() == first, "output independent of the thread count")


if __name__ == "__main__":
    main()
