"""Command-line driver: run deployments, check gradients, recompute KPIs,
and render trace snapshots.

Exit codes: 0 success, 1 validation/input error, 2 tolerance breach.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from .coverage import global_coverage, refined_cell, weighted_coverage_factor
from .coverage import LocalView
from .deployment import run_deployment
from .field import SensorSpec
from .geometry import DomainError, distance
from .gradient import local_gradient
from .render import render_svg
from .scenario import (
    Scenario,
    ScenarioError,
    parse_scenario,
    parse_trace,
    write_metrics_csv,
    write_trace_json,
)


def _default_threads(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("COVERAGE_SIM_THREADS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def _load_scenario(path: str) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def _trajectories(records, scenario, upto: int):
    rows = [r for r in records if r.t <= upto]
    return [
        [row.positions[k] for row in rows]
        for k, spec in enumerate(scenario.sensors)
        if spec.mobile
    ]


def cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    threads = _default_threads(args.threads)
    trace = run_deployment(
        scenario,
        threads=threads,
        enforce_connectivity=args.enforce_connectivity,
    )
    contours = scenario.priority.variant != "uniform"
    (out / "metrics.csv").write_text(write_metrics_csv(trace), encoding="utf-8")
    (out / "trace.json").write_text(write_trace_json(trace, scenario), encoding="utf-8")
    (out / "initial.svg").write_text(
        render_svg(scenario, trace.initial.positions, priority_contours=contours),
        encoding="utf-8",
    )
    (out / "final.svg").write_text(
        render_svg(
            scenario,
            trace.final.positions,
            trajectories=_trajectories(trace.records, scenario, trace.final.t),
            priority_contours=contours,
        ),
        encoding="utf-8",
    )
    first, last = trace.initial, trace.final
    print(f"terminated: {trace.termination} after {last.t} iterations")
    print(f"weighted factor: {first.weighted_factor:.4f} -> {last.weighted_factor:.4f}")
    print(f"area factor:     {first.area_factor:.4f} -> {last.area_factor:.4f}")
    return 0


def cmd_check_gradient(args) -> int:
    scenario = _load_scenario(args.scenario)
    mobiles = [s for s in scenario.sensors if s.mobile]
    if args.sensor is not None:
        mobiles = [s for s in mobiles if s.id == args.sensor]
        if not mobiles:
            print(f"no mobile sensor with id {args.sensor}", file=sys.stderr)
            return 1
    breach = False
    for spec in mobiles:
        view = _full_view(scenario, spec)
        region = refined_cell(view)
        report = local_gradient(view, region, scenario.priority, scenario.quad,
                                with_fd=True, h_fd=args.h_fd)
        fd = report.fd_total
        nfd = float(np.hypot(fd[0], fd[1]))
        nt = float(np.hypot(report.total[0], report.total[1]))
        rel = float(np.hypot(*(report.total - fd))) / nfd if nfd > 0 else 0.0
        angle = _angle_deg(report.total, fd) if nfd > 1e-12 and nt > 1e-12 else 0.0
        print(
            f"sensor {spec.id}: total=({report.total[0]:+.6f},{report.total[1]:+.6f}) "
            f"fd=({fd[0]:+.6f},{fd[1]:+.6f}) rel_err={rel:.4f} angle={angle:.2f} deg"
        )
        if nfd > 1e-2 and rel > args.tol:
            breach = True
    return 2 if breach else 0


def _full_view(scenario: Scenario, spec: SensorSpec) -> LocalView:
    mob, sta = [], []
    for other in scenario.sensors:
        if other.id == spec.id:
            continue
        if distance(other.position, spec.position) <= scenario.r_c:
            (mob if other.mobile else sta).append(other)
    return LocalView(
        sensor=spec,
        mobile_neighbors=tuple(mob),
        stationary_neighbors=tuple(sta),
        roi=scenario.roi,
        obstacles=scenario.obstacles,
        sensing=scenario.sensing,
    )


def _angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.hypot(a[0], a[1]), np.hypot(b[0], b[1])
    c = float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))
    return math.degrees(math.acos(c))


def cmd_kpi(args) -> int:
    trace, scenario = parse_trace(Path(args.trace).read_text(encoding="utf-8"))
    if scenario is None:
        print("trace file carries no scenario; cannot recompute KPIs", file=sys.stderr)
        return 1
    row = trace.final
    F, area = global_coverage(scenario, row.positions)
    weighted = weighted_coverage_factor(F, scenario)
    print(f"t={row.t} F={F:.6g} weighted_factor={weighted:.6g} area_factor={area:.6g}")
    print(
        f"recorded: F={row.coverage:.6g} weighted_factor={row.weighted_factor:.6g} "
        f"area_factor={row.area_factor:.6g}"
    )
    return 0


def cmd_render(args) -> int:
    trace, scenario = parse_trace(Path(args.trace).read_text(encoding="utf-8"))
    if scenario is None:
        print("trace file carries no scenario; cannot render", file=sys.stderr)
        return 1
    t = args.iter if args.iter is not None else trace.final.t
    rows = [r for r in trace.records if r.t == t]
    if not rows:
        print(f"no record with t={t}", file=sys.stderr)
        return 1
    svg = render_svg(
        scenario,
        rows[0].positions,
        trajectories=_trajectories(trace.records, scenario, t),
        priority_contours=scenario.priority.variant != "uniform",
    )
    if args.out:
        Path(args.out).write_text(svg, encoding="utf-8")
    else:
        print(svg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coverage-sim",
                                 description="hybrid sensor network coverage deployment")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a deployment scenario")
    run.add_argument("scenario")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--threads", type=int, default=None,
                     help="worker threads (default: COVERAGE_SIM_THREADS or machine)")
    run.add_argument("--enforce-connectivity", action="store_true",
                     help="clamp steps so existing links never exceed r_c")
    run.set_defaults(func=cmd_run)

    chk = sub.add_parser("check-gradient", help="analytic vs finite-difference gradient")
    chk.add_argument("scenario")
    chk.add_argument("--sensor", type=int, default=None, help="mobile sensor id")
    chk.add_argument("--h-fd", type=float, default=1e-3, dest="h_fd")
    chk.add_argument("--tol", type=float, default=0.10,
                     help="relative error tolerance (checked when |fd| > 0.01)")
    chk.set_defaults(func=cmd_check_gradient)

    kpi = sub.add_parser("kpi", help="recompute KPIs from a trace file")
    kpi.add_argument("trace")
    kpi.set_defaults(func=cmd_kpi)

    ren = sub.add_parser("render", help="render one iteration of a trace to SVG")
    ren.add_argument("trace")
    ren.add_argument("--iter", type=int, default=None)
    ren.add_argument("--out", default=None)
    ren.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
