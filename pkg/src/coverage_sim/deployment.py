"""Per-sensor deployment controller and the round-based run loop.

Each round a mobile sensor builds its cell from the neighbor messages it
received, takes one normalized gradient step with the dynamic step size,
projects the candidate into its feasible region, and accepts the move only
when the local coverage gain over its frozen cell exceeds the threshold.
A sensor marks itself converged once its own gain falls at or below the
threshold while all neighbors reported standing still, and wakes up again
whenever a neighbor moves.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Mapping, Optional, Sequence

import numpy as np

from .coverage import (
    LocalView,
    QuadratureConfig,
    global_coverage,
    position_coverage,
    priority_integral,
    refined_cell,
    sensing_region_at,
)
from .field import PrioritySpec, SensingParams, SensorSpec
from .gradient import local_gradient
from .geometry import (
    DomainError,
    EmptyRegionError,
    Point2,
    PolyRegion,
    SimplePolygon,
    distance,
    project_to_region,
    region_intersect,
)
from .netsim import RoundMessage, build_graph, deliver_round, is_connected
from .trace import RunTrace, TraceRecord

if TYPE_CHECKING:
    from .scenario import Scenario

log = logging.getLogger(__name__)

MODES = ("synchronous", "sequential")


@dataclass(frozen=True)
class AlgoParams:
    """Step law and stopping parameters of the deployment algorithm."""

    eta0: float
    eta_max: float
    beta: float
    epsilon: float
    max_iters: int
    mode: str = "synchronous"

    def __post_init__(self):
        if min(self.eta0, self.eta_max, self.beta, self.epsilon) <= 0:
            raise DomainError("eta0, eta_max, beta, and epsilon must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class SensorState:
    spec: SensorSpec
    moved: bool = True  # start "moved" so nobody converges before acting once
    converged: bool = False
    trajectory: tuple[Point2, ...] = ()

    def __post_init__(self):
        if not self.trajectory:
            object.__setattr__(self, "trajectory", (self.spec.position,))


def step_size(t: int, grad_norm: float, p: AlgoParams) -> float:
    """Dynamic step: grows toward t = 1/beta, then decays exponentially,
    scaled by the gradient magnitude and capped at eta_max."""
    if t < 1:
        raise DomainError("iteration counter starts at 1")
    if grad_norm < 0:
        raise DomainError("gradient norm cannot be negative")
    return min(p.eta_max, p.eta0 * t * math.exp(-p.beta * t) * grad_norm)


def candidate_position(
    position: Point2,
    gradient: np.ndarray,
    eta: float,
    feasible: PolyRegion,
) -> Point2:
    """One normalized gradient step from `position`, projected into
    `feasible`; degenerate inputs return the current position."""
    g = np.asarray(gradient, dtype=float)
    norm = float(np.hypot(g[0], g[1]))
    if norm <= 1e-15 or eta <= 0:
        return position
    cand = Point2(position.x + eta * g[0] / norm, position.y + eta * g[1] / norm)
    try:
        return project_to_region(cand, feasible)
    except EmptyRegionError:
        return position


@dataclass(frozen=True)
class RoundContext:
    """Static per-run knowledge available to every sensor: the scenario
    geometry and parameters, never other sensors' live state."""

    roi: SimplePolygon
    obstacles: tuple[SimplePolygon, ...]
    sensing: SensingParams
    priority: PrioritySpec
    quad: QuadratureConfig
    algo: AlgoParams
    mobile_count: int
    r_c: float
    stationary_regions: Mapping[int, PolyRegion]
    enforce_connectivity: bool = False


def sensor_round(
    state: SensorState,
    inbox: Sequence[RoundMessage],
    ctx: RoundContext,
    t: int,
) -> tuple[SensorState, RoundMessage]:
    """One protocol round for one sensor; pure in state and inbox."""
    spec = state.spec
    if not spec.mobile:
        new = replace(state, moved=False)
        return new, RoundMessage(sender=spec.id, position=spec.position, moved=False)

    converged = state.converged
    if converged and any(m.moved for m in inbox):
        converged = False
    if converged:
        new = replace(state, moved=False, converged=True)
        return new, RoundMessage(sender=spec.id, position=spec.position, moved=False)

    view = LocalView(
        sensor=spec,
        mobile_neighbors=tuple(
            SensorSpec(m.sender, m.position, True)
            for m in inbox
            if m.sender <= ctx.mobile_count
        ),
        stationary_neighbors=tuple(
            SensorSpec(m.sender, m.position, False)
            for m in inbox
            if m.sender > ctx.mobile_count
        ),
        roi=ctx.roi,
        obstacles=ctx.obstacles,
        sensing=ctx.sensing,
    )

    moved = False
    new_pos = spec.position
    try:
        region = refined_cell(view, stationary_regions=ctx.stationary_regions)
        report = local_gradient(view, region, ctx.priority, ctx.quad)
        gnorm = float(np.hypot(report.total[0], report.total[1]))
        eta = step_size(t, gnorm, ctx.algo)
        if ctx.enforce_connectivity:
            eta = _clamp_for_links(spec.position, report.total, eta, inbox, ctx.r_c)
        feasible = region_intersect(region.pi_prime, region.visibility)
        cand = candidate_position(spec.position, report.total, eta, feasible)
        if distance(cand, spec.position) > 1e-12:
            f_cur = position_coverage(
                spec.position, region.pi_prime, ctx.roi, ctx.obstacles,
                ctx.sensing, ctx.priority, ctx.quad,
            )
            f_cand = position_coverage(
                cand, region.pi_prime, ctx.roi, ctx.obstacles,
                ctx.sensing, ctx.priority, ctx.quad,
            )
            if f_cand - f_cur > ctx.algo.epsilon:
                new_pos = cand
                moved = True
    except DomainError as exc:
        log.warning("sensor %d holds position this round: %s", spec.id, exc)

    if moved:
        converged = False
    elif all(not m.moved for m in inbox):
        converged = True

    new_spec = replace(spec, position=new_pos)
    trajectory = state.trajectory + (new_pos,) if moved else state.trajectory
    new_state = SensorState(
        spec=new_spec, moved=moved, converged=converged, trajectory=trajectory
    )
    return new_state, RoundMessage(sender=spec.id, position=new_pos, moved=moved)


def _clamp_for_links(
    pos: Point2,
    gradient: np.ndarray,
    eta: float,
    inbox: Sequence[RoundMessage],
    r_c: float,
) -> float:
    """Shrink the step so no currently existing link stretches past r_c."""
    g = np.asarray(gradient, dtype=float)
    norm = float(np.hypot(g[0], g[1]))
    if norm <= 1e-15 or eta <= 0:
        return eta
    ux, uy = g[0] / norm, g[1] / norm
    limit = eta
    for m in inbox:
        wx, wy = pos.x - m.position.x, pos.y - m.position.y
        c = wx * wx + wy * wy - r_c * r_c
        if c > 0:
            continue  # link already broken; nothing to preserve
        b = ux * wx + uy * wy
        e_max = -b + math.sqrt(max(b * b - c, 0.0))
        limit = min(limit, max(e_max, 0.0))
    return limit


def _validate_initial(scenario: "Scenario") -> None:
    for s in scenario.sensors:
        if not scenario.roi.contains(s.position):
            raise DomainError(f"sensor {s.id} starts outside the roi")
        for ob in scenario.obstacles:
            if ob.shapely.contains(_shapely_point(s.position)):
                raise DomainError(f"sensor {s.id} starts inside an obstacle")


def _shapely_point(p: Point2):
    from shapely.geometry import Point as _SPoint

    return _SPoint(p.x, p.y)


def run_deployment(
    scenario: "Scenario",
    params: Optional[AlgoParams] = None,
    threads: int = 1,
    enforce_connectivity: bool = False,
) -> RunTrace:
    """Iterate rounds until every mobile sensor converges or max_iters."""
    params = params if params is not None else scenario.algo
    _validate_initial(scenario)

    stationary_regions = {
        s.id: sensing_region_at(s.position, scenario.sensing, scenario.roi, scenario.obstacles)
        for s in scenario.sensors
        if not s.mobile
    }
    ctx = RoundContext(
        roi=scenario.roi,
        obstacles=scenario.obstacles,
        sensing=scenario.sensing,
        priority=scenario.priority,
        quad=scenario.quad,
        algo=params,
        mobile_count=scenario.mobile_count,
        r_c=scenario.r_c,
        stationary_regions=stationary_regions,
        enforce_connectivity=enforce_connectivity,
    )
    states = [SensorState(spec=s) for s in scenario.sensors]
    phi_total = priority_integral(scenario)

    def kpi_record(t: int, moved: int, converged: int) -> TraceRecord:
        positions = tuple(s.spec.position for s in states)
        F, area = global_coverage(scenario, positions)
        graph = build_graph(positions, scenario.r_c)
        return TraceRecord(
            t=t,
            positions=positions,
            coverage=F,
            weighted_factor=float(np.clip(F / phi_total, 0.0, 1.0)),
            area_factor=area,
            moved_count=moved,
            converged_count=converged,
            connected=is_connected(graph),
        )

    records = [kpi_record(0, 0, 0)]
    termination = "max_iters"
    for t in range(1, params.max_iters + 1):
        if params.mode == "synchronous":
            positions = [s.spec.position for s in states]
            graph = build_graph(positions, scenario.r_c)
            inboxes = deliver_round(states, graph)
            jobs = list(range(len(states)))
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    results = list(
                        pool.map(lambda k: sensor_round(states[k], inboxes[k], ctx, t), jobs)
                    )
            else:
                results = [sensor_round(states[k], inboxes[k], ctx, t) for k in jobs]
            states = [r[0] for r in results]
        else:  # sequential (Gauss-Seidel): each sensor sees earlier updates
            for k in range(len(states)):
                positions = [s.spec.position for s in states]
                graph = build_graph(positions, scenario.r_c)
                inboxes = deliver_round(states, graph)
                states[k] = sensor_round(states[k], inboxes[k], ctx, t)[0]

        moved = sum(1 for s in states if s.moved)
        converged = sum(1 for s in states if s.spec.mobile and s.converged)
        records.append(kpi_record(t, moved, converged))
        if all(s.converged for s in states if s.spec.mobile):
            termination = "converged"
            break

    return RunTrace(
        records=tuple(records),
        final_positions=tuple(s.spec.position for s in states),
        termination=termination,
    )
