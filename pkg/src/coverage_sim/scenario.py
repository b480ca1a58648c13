"""Scenario files, validation, and trace/metrics serialization.

Scenarios are JSON documents with the keys: roi (vertex list), obstacles
(list of vertex lists), sensing{r_min,r_max,alpha}, r_c, priority{type,...},
sensors[{x,y,mobile}] and/or init{...}, algo{eta0,eta_max,beta,epsilon,
max_iters,mode}, quad{h_area,h_line}, seed.  Random initializers are
expanded deterministically from the seed at parse time, so a parsed
scenario always carries an explicit roster with mobile sensors first.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from shapely.geometry import Point as _SPoint

from .coverage import QuadratureConfig
from .deployment import AlgoParams
from .field import PrioritySpec, SensingParams, SensorSpec
from .geometry import DomainError, Point2, SimplePolygon
from .trace import RunTrace, TraceRecord


class ScenarioError(ValueError):
    """A scenario document failed validation; the message names the key."""


@dataclass(frozen=True)
class Scenario:
    roi: SimplePolygon
    obstacles: tuple[SimplePolygon, ...]
    sensing: SensingParams
    r_c: float
    priority: PrioritySpec
    sensors: tuple[SensorSpec, ...]
    algo: AlgoParams
    quad: QuadratureConfig
    seed: int

    @property
    def mobile_count(self) -> int:
        return sum(1 for s in self.sensors if s.mobile)


_TOP_KEYS = {"roi", "obstacles", "sensing", "r_c", "priority", "sensors", "init",
             "algo", "quad", "seed"}


def _require(obj: dict, key: str, ctx: str):
    if key not in obj:
        raise ScenarioError(f"missing key {ctx}{key}")
    return obj[key]


def _check_keys(obj: dict, allowed: set[str], ctx: str):
    for k in obj:
        if k not in allowed:
            raise ScenarioError(f"unknown field {ctx}{k}")


def _vertex_list(raw, ctx: str) -> SimplePolygon:
    if not isinstance(raw, list) or len(raw) < 3:
        raise ScenarioError(f"{ctx} must be a list of at least 3 [x, y] vertices")
    try:
        return SimplePolygon([(float(v[0]), float(v[1])) for v in raw])
    except (DomainError, TypeError, IndexError) as exc:
        raise ScenarioError(f"{ctx} is not a simple polygon: {exc}") from exc


def _parse_priority(raw: dict) -> PrioritySpec:
    if not isinstance(raw, dict):
        raise ScenarioError("priority must be an object")
    kind = _require(raw, "type", "priority.")
    if kind == "uniform":
        _check_keys(raw, {"type"}, "priority.")
        return PrioritySpec.uniform()
    if kind == "max_of_gaussians":
        _check_keys(raw, {"type", "components"}, "priority.")
        comps = _require(raw, "components", "priority.")
        parsed = []
        for c in comps:
            _check_keys(c, {"center", "decay"}, "priority.components.")
            center = _require(c, "center", "priority.components.")
            decay = float(_require(c, "decay", "priority.components."))
            parsed.append((Point2(float(center[0]), float(center[1])), decay))
        try:
            return PrioritySpec.max_of_gaussians(parsed)
        except DomainError as exc:
            raise ScenarioError(f"priority.components invalid: {exc}") from exc
    if kind == "raster":
        _check_keys(raw, {"type", "origin", "cell_size", "weights"}, "priority.")
        origin = _require(raw, "origin", "priority.")
        cell = float(_require(raw, "cell_size", "priority."))
        weights = _require(raw, "weights", "priority.")
        try:
            return PrioritySpec.raster(Point2(float(origin[0]), float(origin[1])), cell, weights)
        except DomainError as exc:
            raise ScenarioError(f"priority raster invalid: {exc}") from exc
    raise ScenarioError(f"unknown field priority.type={kind!r}")


def _inside_field(p: Point2, roi: SimplePolygon, obstacles: Sequence[SimplePolygon]) -> bool:
    if not roi.contains(p):
        return False
    sp = _SPoint(p.x, p.y)
    return not any(ob.shapely.covers(sp) for ob in obstacles)


def _expand_init(raw: dict, roi: SimplePolygon, obstacles, rng: np.random.Generator,
                 taken: list[Point2]) -> list[Point2]:
    _check_keys(raw, {"type", "center", "radius", "count"}, "init.")
    kind = _require(raw, "type", "init.")
    count = int(_require(raw, "count", "init."))
    if count < 0:
        raise ScenarioError("init.count must be non-negative")
    x0, y0, x1, y1 = roi.bounds
    out: list[Point2] = []

    def clash(p: Point2) -> bool:
        return any(math.hypot(p.x - q.x, p.y - q.y) < 1e-6 for q in taken + out)

    if kind == "clustered":
        c = roi.shapely.centroid
        center = raw.get("center")
        cx, cy = (float(center[0]), float(center[1])) if center else (c.x, c.y)
        radius = float(raw.get("radius", 2.0))
        if radius <= 0:
            raise ScenarioError("init.radius must be positive")
        while len(out) < count:
            r = radius * math.sqrt(rng.random())
            a = 2.0 * math.pi * rng.random()
            p = Point2(cx + r * math.cos(a), cy + r * math.sin(a))
            if _inside_field(p, roi, obstacles) and not clash(p):
                out.append(p)
    elif kind == "uniform_random":
        if "center" in raw or "radius" in raw:
            raise ScenarioError("unknown field init.center/init.radius for uniform_random")
        while len(out) < count:
            p = Point2(x0 + rng.random() * (x1 - x0), y0 + rng.random() * (y1 - y0))
            if _inside_field(p, roi, obstacles) and not clash(p):
                out.append(p)
    else:
        raise ScenarioError(f"unknown field init.type={kind!r}")
    return out


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "")

    roi = _vertex_list(_require(raw, "roi", ""), "roi")
    obstacles = tuple(
        _vertex_list(ob, f"obstacles[{i}]") for i, ob in enumerate(raw.get("obstacles", []))
    )

    s = _require(raw, "sensing", "")
    _check_keys(s, {"r_min", "r_max", "alpha"}, "sensing.")
    r_min = float(_require(s, "r_min", "sensing."))
    r_max = float(_require(s, "r_max", "sensing."))
    alpha = float(_require(s, "alpha", "sensing."))
    if r_min > r_max:
        raise ScenarioError("sensing.r_min exceeds r_max")
    try:
        sensing = SensingParams(r_min=r_min, r_max=r_max, alpha=alpha)
    except DomainError as exc:
        raise ScenarioError(f"sensing invalid: {exc}") from exc

    r_c = float(_require(raw, "r_c", ""))
    if r_c <= 0:
        raise ScenarioError("r_c must be positive")

    priority = _parse_priority(_require(raw, "priority", ""))

    a = _require(raw, "algo", "")
    _check_keys(a, {"eta0", "eta_max", "beta", "epsilon", "max_iters", "mode"}, "algo.")
    try:
        algo = AlgoParams(
            eta0=float(_require(a, "eta0", "algo.")),
            eta_max=float(_require(a, "eta_max", "algo.")),
            beta=float(_require(a, "beta", "algo.")),
            epsilon=float(_require(a, "epsilon", "algo.")),
            max_iters=int(_require(a, "max_iters", "algo.")),
            mode=a.get("mode", "synchronous"),
        )
    except DomainError as exc:
        raise ScenarioError(f"algo invalid: {exc}") from exc

    q = _require(raw, "quad", "")
    _check_keys(q, {"h_area", "h_line"}, "quad.")
    try:
        quad = QuadratureConfig(
            h_area=float(_require(q, "h_area", "quad.")),
            h_line=float(_require(q, "h_line", "quad.")),
        )
    except DomainError as exc:
        raise ScenarioError(f"quad invalid: {exc}") from exc

    seed = int(raw.get("seed", 0))
    rng = np.random.default_rng(seed)

    mobile_pts: list[Point2] = []
    stationary_pts: list[Point2] = []
    for i, entry in enumerate(raw.get("sensors", [])):
        _check_keys(entry, {"x", "y", "mobile"}, f"sensors[{i}].")
        p = Point2(float(_require(entry, "x", f"sensors[{i}].")),
                   float(_require(entry, "y", f"sensors[{i}].")))
        if not roi.contains(p):
            raise ScenarioError(f"sensors[{i}] lies outside the roi")
        if any(ob.shapely.covers(_SPoint(p.x, p.y)) for ob in obstacles):
            raise ScenarioError(f"sensors[{i}] lies inside an obstacle")
        if bool(entry.get("mobile", True)):
            mobile_pts.append(p)
        else:
            stationary_pts.append(p)
    if "init" in raw:
        mobile_pts.extend(
            _expand_init(raw["init"], roi, obstacles, rng, mobile_pts + stationary_pts)
        )
    if not mobile_pts and not stationary_pts:
        raise ScenarioError("scenario defines no sensors")

    sensors = tuple(
        [SensorSpec(i + 1, p, True) for i, p in enumerate(mobile_pts)]
        + [SensorSpec(len(mobile_pts) + i + 1, p, False) for i, p in enumerate(stationary_pts)]
    )
    return Scenario(
        roi=roi, obstacles=obstacles, sensing=sensing, r_c=r_c, priority=priority,
        sensors=sensors, algo=algo, quad=quad, seed=seed,
    )


def serialize_scenario(sc: Scenario) -> str:
    """Serialize with the roster fully expanded; parse(serialize(s)) == s."""
    doc = {
        "roi": [[v.x, v.y] for v in sc.roi.vertices],
        "obstacles": [[[v.x, v.y] for v in ob.vertices] for ob in sc.obstacles],
        "sensing": {"r_min": sc.sensing.r_min, "r_max": sc.sensing.r_max,
                    "alpha": sc.sensing.alpha},
        "r_c": sc.r_c,
        "priority": _priority_doc(sc.priority),
        "sensors": [{"x": s.position.x, "y": s.position.y, "mobile": s.mobile}
                    for s in sc.sensors],
        "algo": {"eta0": sc.algo.eta0, "eta_max": sc.algo.eta_max, "beta": sc.algo.beta,
                 "epsilon": sc.algo.epsilon, "max_iters": sc.algo.max_iters,
                 "mode": sc.algo.mode},
        "quad": {"h_area": sc.quad.h_area, "h_line": sc.quad.h_line},
        "seed": sc.seed,
    }
    return json.dumps(doc, indent=2)


def _priority_doc(spec: PrioritySpec) -> dict:
    if spec.variant == "uniform":
        return {"type": "uniform"}
    if spec.variant == "max_of_gaussians":
        return {
            "type": "max_of_gaussians",
            "components": [
                {"center": [c.center.x, c.center.y], "decay": c.decay}
                for c in spec.components
            ],
        }
    return {
        "type": "raster",
        "origin": [spec.raster_origin.x, spec.raster_origin.y],
        "cell_size": spec.raster_cell,
        "weights": [list(row) for row in spec.raster_weights],
    }


# ---------------------------------------------------------------------------
# metrics / trace output

CSV_HEADER = "t,F,weighted_factor,area_factor,moved,converged,connected"


def write_metrics_csv(trace: RunTrace) -> str:
    """One row per iteration; factors carry at least 6 significant digits."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in trace.records:
        buf.write(
            f"{r.t},{r.coverage:.9g},{r.weighted_factor:.9g},{r.area_factor:.9g},"
            f"{r.moved_count},{r.converged_count},{int(r.connected)}\n"
        )
    return buf.getvalue()


def write_trace_json(trace: RunTrace, scenario: Optional[Scenario] = None) -> str:
    """Lossless trace document; embeds the scenario so KPIs can be
    recomputed from the file alone."""
    doc = {
        "termination": trace.termination,
        "final_positions": [[p.x, p.y] for p in trace.final_positions],
        "records": [
            {
                "t": r.t,
                "positions": [[p.x, p.y] for p in r.positions],
                "F": r.coverage,
                "weighted_factor": r.weighted_factor,
                "area_factor": r.area_factor,
                "moved": r.moved_count,
                "converged": r.converged_count,
                "connected": r.connected,
            }
            for r in trace.records
        ],
    }
    if scenario is not None:
        doc["scenario"] = json.loads(serialize_scenario(scenario))
    return json.dumps(doc, indent=2)


def parse_trace(text: str) -> tuple[RunTrace, Optional[Scenario]]:
    """Inverse of write_trace_json."""
    raw = json.loads(text)
    records = tuple(
        TraceRecord(
            t=int(r["t"]),
            positions=tuple(Point2(p[0], p[1]) for p in r["positions"]),
            coverage=float(r["F"]),
            weighted_factor=float(r["weighted_factor"]),
            area_factor=float(r["area_factor"]),
            moved_count=int(r["moved"]),
            converged_count=int(r["converged"]),
            connected=bool(r["connected"]),
        )
        for r in raw["records"]
    )
    trace = RunTrace(
        records=records,
        final_positions=tuple(Point2(p[0], p[1]) for p in raw["final_positions"]),
        termination=raw["termination"],
    )
    scenario = None
    if "scenario" in raw:
        scenario = parse_scenario(json.dumps(raw["scenario"]))
    return trace, scenario
