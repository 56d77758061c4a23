"""Command-line front end.

Verbs: ``analyze``, ``design-gamma``, ``design-weights``, ``simulate``,
``sweep``.  Outputs are line-delimited JSON records (trajectories are
CSV).  Exit codes: 0 success, 1 input error, 2 unstable or infinite
measure, 3 infeasible design, 4 runtime domain violation.  The env var
``DST_LOG`` sets the diagnostic level (DEBUG/INFO/WARNING/...).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import design, dynamics
from .errors import (
    CaseDomainViolationError,
    DstError,
    GraphError,
    InfeasibleStartError,
    NoInteriorOptimumError,
    NumericalBlowupError,
    ScenarioError,
    UnstableError,
)
from .graph import read_graph, write_graph
from .measures import NoiseModel, convergence_factor, is_infinite, measure_report

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNSTABLE = 2
EXIT_INFEASIBLE = 3
EXIT_DOMAIN = 4


def _parse_noise(spec: str, gamma_scaling: bool) -> NoiseModel:
    """Noise option grammar: ``iid:SIGMA`` or ``file:PATH`` (JSON)."""
    kind, _, rest = spec.partition(":")
    if kind == "iid":
        return NoiseModel.iid(float(rest), gamma_scaling=gamma_scaling)
    if kind == "file":
        with open(rest, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        nkind = data["kind"]
        if nkind == "iid":
            return NoiseModel.iid(float(data["sigma"]), gamma_scaling=gamma_scaling)
        if nkind == "independent":
            return NoiseModel.independent(data["sigmas"], gamma_scaling=gamma_scaling)
        if nkind == "general":
            return NoiseModel.general(np.asarray(data["cov"]), gamma_scaling=gamma_scaling)
        raise ValueError(f"unknown noise kind {nkind!r}")
    raise ValueError(f"noise spec must be iid:SIGMA or file:PATH, got {spec!r}")


def _parse_sweep(spec: str) -> tuple[str, list]:
    """Sweep grammar: ``axis:v1,v2,...`` or ``axis:start:stop:count``."""
    axis, _, rest = spec.partition(":")
    if axis not in ("gamma", "edge-weight-scale", "graph-file-list", "seed"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    if not rest:
        raise ValueError("sweep spec needs values")
    if axis == "graph-file-list":
        return axis, [v for v in rest.split(",") if v]
    parts = rest.split(":")
    if len(parts) == 3:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("sweep count must be >= 1")
        values = np.linspace(start, stop, count).tolist()
    else:
        values = [float(v) for v in rest.split(",")]
    if axis == "seed":
        values = [int(v) for v in values]
    if not all(np.isfinite(v) for v in values):
        raise ValueError("sweep values must be finite")
    return axis, values


def _emit(record: dict, out_dir: Path | None, filename: str) -> None:
    line = json.dumps(record)
    print(line)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / filename).write_text(line + "\n", encoding="utf-8")


def _cmd_analyze(args) -> int:
    g = read_graph(args.graph)
    noise = _parse_noise(args.noise, args.gamma_scaling == "on")
    report = measure_report(g, args.gamma, noise)
    _emit(report.to_record(), args.out, "analyze.json")
    return EXIT_OK if report.stable and not is_infinite(report.phi_ss) else EXIT_UNSTABLE


def _cmd_design_gamma(args) -> int:
    g = read_graph(args.graph)
    if args.mode == "steady":
        result = design.optimal_gamma_steady(g)
    else:
        noise = _parse_noise(args.noise, args.gamma_scaling == "on")
        cfg = design.SolverConfig(max_iters=args.max_iters, tol=args.tol)
        result = design.optimal_gamma_nonsteady(g, noise, cfg)
    _emit(result.to_record(), args.out, "design.json")
    return EXIT_OK


def _cmd_design_weights(args) -> int:
    g = read_graph(args.graph)
    cfg = design.SolverConfig(max_iters=args.max_iters, tol=args.tol)
    if args.mode == "fastest":
        cfg = dataclasses.replace(cfg, step_rule=design.DiminishingStep(0.25))
        result = design.fastest_weights(g, args.gamma, cfg)
    else:
        noise = _parse_noise(args.noise, args.gamma_scaling == "on")
        cfg = dataclasses.replace(cfg, step_rule=design.BacktrackingStep())
        result = design.robust_weights(g, args.gamma, noise, cfg)
    _emit(result.to_record(), args.out, "design.json")
    if args.out is not None:
        write_graph(g.with_weights(result.weights), args.out / "graph_optimized.txt")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    scenario = dynamics.load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    traj = dynamics.simulate(scenario)
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out / "trajectory.csv")
    if args.emit_plot_data:
        traj.write_plot_data(out / "plot_data.csv")
    summary = {
        "scenario": str(args.scenario),
        "seed": scenario.seed,
        "phi_cr": convergence_factor(scenario.graph, scenario.gamma),
        **traj.summary(),
    }
    (out / "summary.json").write_text(json.dumps(summary) + "\n", encoding="utf-8")
    print(json.dumps(summary))
    return EXIT_OK


def _sweep_row(scenario, axis, value, base_dir) -> dict:
    row = {"axis": axis, "value": value}
    try:
        if axis == "gamma":
            scenario = dataclasses.replace(scenario, gamma=float(value))
        elif axis == "seed":
            scenario = dataclasses.replace(scenario, seed=int(value))
        elif axis == "edge-weight-scale":
            g = scenario.graph
            scenario = dataclasses.replace(
                scenario, graph=g.with_weights(g.weights() * float(value))
            )
        else:
            gpath = Path(value)
            if not gpath.is_absolute():
                gpath = base_dir / gpath
            scenario = dataclasses.replace(scenario, graph=read_graph(gpath))
        row["phi_cr"] = convergence_factor(scenario.graph, scenario.gamma)
        row.update(dynamics.simulate(scenario).summary())
    except (DstError, OSError) as exc:
        row["error"] = str(exc)
    return row


def _cmd_sweep(args) -> int:
    scenario = dynamics.load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    axis, values = _parse_sweep(args.sweep)
    base_dir = Path(args.scenario).parent
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(lambda v: _sweep_row(scenario, axis, v, base_dir), values))
    else:
        rows = [_sweep_row(scenario, axis, v, base_dir) for v in values]
    lines = "".join(json.dumps(row) + "\n" for row in rows)
    sys.stdout.write(lines)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "sweep.jsonl").write_text(lines, encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dst",
        description="Analyze, design, and simulate distributed system throttlers.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p, graph=False, gamma=False, noise=False, scenario=False):
        if graph:
            p.add_argument("--graph", required=True, type=Path, help="graph file (n m / i j w)")
        if gamma:
            p.add_argument("--gamma", required=True, type=float, help="server update cycle")
        if noise:
            p.add_argument("--noise", default="iid:1.0", help="iid:SIGMA or file:PATH")
            p.add_argument(
                "--gamma-scaling",
                choices=("on", "off"),
                default="on",
                help="whether the demand covariance carries a factor gamma",
            )
        if scenario:
            p.add_argument("--scenario", required=True, type=Path, help="scenario JSON file")
            p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", type=Path, default=None, help="output directory")

    p = sub.add_parser("analyze", help="report measures for a graph at a given gamma")
    add_common(p, graph=True, gamma=True, noise=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("design-gamma", help="optimize the server update cycle")
    p.add_argument("--mode", choices=("steady", "nonsteady"), required=True)
    add_common(p, graph=True, noise=True)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_design_gamma)

    p = sub.add_parser("design-weights", help="optimize link weights on a support")
    p.add_argument("--mode", choices=("fastest", "robust"), required=True)
    add_common(p, graph=True, gamma=True, noise=True)
    p.add_argument("--max-iters", type=int, default=3000)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_design_weights)

    p = sub.add_parser("simulate", help="run a scenario and write its trajectory")
    add_common(p, scenario=True)
    p.add_argument("--emit-plot-data", action="store_true", help="also write tidy plot CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a scenario across an axis of values")
    add_common(p, scenario=True)
    p.add_argument("--sweep", required=True, help="axis:v1,v2,... or axis:start:stop:count")
    p.add_argument("--jobs", type=int, default=1, help="parallel rows")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("DST_LOG", "WARNING").upper(),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GraphError, ScenarioError, FileNotFoundError, ValueError) as exc:
        print(f"dst: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnstableError as exc:
        print(f"dst: unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (InfeasibleStartError, NoInteriorOptimumError) as exc:
        print(f"dst: infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CaseDomainViolationError, NumericalBlowupError) as exc:
        print(f"dst: runtime domain violation: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
