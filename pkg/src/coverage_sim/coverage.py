"""Coverage regions and numerical quadrature of the coverage functionals.

Surface integrals use the midpoint rule on a uniform axis-aligned lattice
anchored at the roi bounding-box corner, so that every local window is a
subset of the one global grid.  Grid cells count fully when their center
lies inside the region being integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Optional, Sequence

import numpy as np

from .field import PrioritySpec, SensingParams, SensorSpec, elfes_profile, priority_field
from .geometry import (
    DomainError,
    Point2,
    PolyRegion,
    SimplePolygon,
    distance,
    halfplane_region,
    occluding_vertices,
    polygonize_disk,
    region_intersect,
    region_subtract,
    visibility_region,
)

if TYPE_CHECKING:
    from .scenario import Scenario


@dataclass(frozen=True)
class QuadratureConfig:
    """Grid pitch for surface integrals and subdivision length for line
    integrals."""

    h_area: float
    h_line: float

    def __post_init__(self):
        if self.h_area <= 0 or self.h_line <= 0:
            raise DomainError("quadrature steps must be positive")


@dataclass(frozen=True)
class LocalView:
    """Everything a mobile sensor knows in one round: itself, the neighbors
    it heard from, and the static scenario geometry."""

    sensor: SensorSpec
    mobile_neighbors: tuple[SensorSpec, ...]
    stationary_neighbors: tuple[SensorSpec, ...]
    roi: SimplePolygon
    obstacles: tuple[SimplePolygon, ...]
    sensing: SensingParams


@dataclass(frozen=True)
class CoverageRegion:
    """The nested regions a sensor integrates over.

    pi: Voronoi cell among the mobile roster; pi_prime: pi minus the parts
    better covered by stationary neighbors; d_region: pi_prime clipped to
    the visibility-limited sensing disk; annulus: d_region minus the
    certain-detection disk.  `visibility` keeps the full visibility polygon
    for boundary tests downstream.
    """

    pi: PolyRegion
    pi_prime: PolyRegion
    d_region: PolyRegion
    annulus: PolyRegion
    visibility: PolyRegion


# ---------------------------------------------------------------------------
# lattice helpers

def grid_axis(origin: float, h: float, lo: float, hi: float) -> np.ndarray:
    """Cell centers origin + (k + 1/2) h covering [lo, hi]."""
    k0 = math.floor((lo - origin) / h - 0.5)
    k1 = math.ceil((hi - origin) / h - 0.5)
    return origin + (np.arange(k0, k1 + 1) + 0.5) * h


def grid_window(origin: tuple[float, float], h: float, bounds) -> tuple[np.ndarray, np.ndarray]:
    """Flattened mesh of lattice cell centers covering `bounds`
    (minx, miny, maxx, maxy)."""
    x0, y0, x1, y1 = bounds
    xs = grid_axis(origin[0], h, x0, x1)
    ys = grid_axis(origin[1], h, y0, y1)
    X, Y = np.meshgrid(xs, ys)
    return X.ravel(), Y.ravel()


# ---------------------------------------------------------------------------
# region construction

def sensing_region(
    sensor: SensorSpec,
    params: SensingParams,
    roi: SimplePolygon,
    obstacles: Sequence[SimplePolygon],
) -> PolyRegion:
    """Visibility-clipped sensing disk D(s) of one sensor."""
    return sensing_region_at(sensor.position, params, roi, obstacles)


def sensing_region_at(
    position: Point2,
    params: SensingParams,
    roi: SimplePolygon,
    obstacles: Sequence[SimplePolygon],
) -> PolyRegion:
    vis = visibility_region(position, roi, obstacles)
    disk = PolyRegion(polygonize_disk(position, params.r_max))
    return region_intersect(vis, disk)


def refined_cell(
    view: LocalView,
    stationary_regions: Optional[Mapping[int, PolyRegion]] = None,
) -> CoverageRegion:
    """Build pi, pi_prime, d_region, and the annulus for one sensor.

    pi_prime removes, for each stationary neighbor, the part of that
    neighbor's sensing region lying closer to the neighbor than to us.
    Precomputed stationary regions can be supplied keyed by sensor id.
    """
    pos = view.sensor.position
    roi = view.roi
    vis = visibility_region(pos, roi, view.obstacles)
    disk = PolyRegion(polygonize_disk(pos, view.sensing.r_max))
    d_full = region_intersect(vis, disk)

    pi = voronoi_cell_of(view)
    pi_prime = pi
    x0, y0, x1, y1 = roi.bounds
    extent = 4.0 * math.hypot(x1 - x0, y1 - y0) + 1.0
    for nb in view.stationary_neighbors:
        if stationary_regions is not None and nb.id in stationary_regions:
            d_j = stationary_regions[nb.id]
        else:
            d_j = sensing_region_at(nb.position, view.sensing, roi, view.obstacles)
        closer_to_j = halfplane_region(nb.position, pos, extent)
        pi_prime = region_subtract(pi_prime, region_intersect(d_j, closer_to_j))

    d_region = region_intersect(pi_prime, d_full)
    inner = PolyRegion(polygonize_disk(pos, view.sensing.r_min))
    annulus = region_subtract(d_region, inner)
    return CoverageRegion(pi=pi, pi_prime=pi_prime, d_region=d_region,
                          annulus=annulus, visibility=vis)


def voronoi_cell_of(view: LocalView) -> PolyRegion:
    from .geometry import voronoi_cell

    return voronoi_cell(
        view.sensor.position,
        [nb.position for nb in view.mobile_neighbors],
        view.roi,
    )


# ---------------------------------------------------------------------------
# local coverage

def local_coverage(
    view: LocalView,
    region: CoverageRegion,
    priority: PrioritySpec,
    quad: QuadratureConfig,
) -> float:
    """Midpoint-rule integral of priority * detection over d_region."""
    if region.d_region.is_empty:
        return 0.0
    origin = view.roi.bounds[:2]
    X, Y = grid_window(origin, quad.h_area, region.d_region.bounds)
    mask = region.d_region.contains_xy(X, Y)
    if not mask.any():
        return 0.0
    X, Y = X[mask], Y[mask]
    d = np.hypot(X - view.sensor.position.x, Y - view.sensor.position.y)
    p = elfes_profile(view.sensing, d)
    phi = priority_field(priority, X, Y)
    return float(np.sum(phi * p) * quad.h_area**2)


def position_coverage(
    pos: Point2,
    pi_prime: PolyRegion,
    roi: SimplePolygon,
    obstacles: Sequence[SimplePolygon],
    sensing: SensingParams,
    priority: PrioritySpec,
    quad: QuadratureConfig,
    smooth: bool = True,
) -> float:
    """Coverage collected from `pos` over a frozen pi_prime.

    The sensing disk and visibility are recomputed at `pos` while the cell
    itself stays fixed, which is exactly the functional the move-acceptance
    test and the finite-difference oracle need.  With smooth=True the hard
    r_max cutoff and the shadow boundaries are replaced by one-cell-wide
    linear ramps so the result varies smoothly under small displacements.
    """
    if pi_prime.is_empty:
        return 0.0
    h = quad.h_area
    origin = roi.bounds[:2]
    pad = sensing.r_max + 2.0 * h
    window = (pos.x - pad, pos.y - pad, pos.x + pad, pos.y + pad)
    X, Y = grid_window(origin, h, window)
    mask = pi_prime.contains_xy(X, Y)
    if not mask.any():
        return 0.0
    X, Y = X[mask], Y[mask]
    d = np.hypot(X - pos.x, Y - pos.y)
    if smooth:
        p = elfes_profile(sensing, d, cutoff=False)
        p = p * np.clip((sensing.r_max + 0.5 * h - d) / h, 0.0, 1.0)
    else:
        p = elfes_profile(sensing, d)
    w = _visibility_weights(pos, X, Y, roi, obstacles, sensing, h, smooth)
    phi = priority_field(priority, X, Y)
    return float(np.sum(phi * p * w) * h * h)


def _visibility_weights(
    pos: Point2,
    X: np.ndarray,
    Y: np.ndarray,
    roi: SimplePolygon,
    obstacles: Sequence[SimplePolygon],
    sensing: SensingParams,
    h: float,
    smooth: bool,
) -> np.ndarray:
    if not obstacles:
        return np.ones_like(X)
    vis = visibility_region(pos, roi, obstacles)
    w = vis.contains_xy(X, Y).astype(float)
    if not smooth:
        return w
    # linear ramp across each shadow line so occlusion boundaries move
    # smoothly with the sensor
    padded = region_intersect(
        PolyRegion(polygonize_disk(pos, sensing.r_max + 2.0 * h)), PolyRegion(roi)
    )
    for edge in occluding_vertices(pos, obstacles, padded):
        vx, vy = edge.inner.x, edge.inner.y
        ex, ey = edge.outer.x - vx, edge.outer.y - vy
        length = math.hypot(ex, ey)
        if length < 1e-12:
            continue
        ux, uy = ex / length, ey / length
        nvx, nvy = -edge.occluded_side.x, -edge.occluded_side.y  # toward visible
        s = (X - vx) * ux + (Y - vy) * uy
        tsig = (X - vx) * nvx + (Y - vy) * nvy
        band = (s >= 0.0) & (s <= length) & (np.abs(tsig) <= 0.5 * h)
        if band.any():
            w[band] = np.clip(0.5 + tsig[band] / h, 0.0, 1.0)
    return w


# ---------------------------------------------------------------------------
# global coverage and KPIs

def field_region(roi: SimplePolygon, obstacles: Sequence[SimplePolygon]) -> PolyRegion:
    """The roi minus all obstacle interiors."""
    reg = PolyRegion(roi)
    for ob in obstacles:
        reg = region_subtract(reg, PolyRegion(ob))
    return reg


def _global_lattice(roi: SimplePolygon, h: float):
    x0, y0, x1, y1 = roi.bounds
    xs = grid_axis(x0, h, x0, x1)
    ys = grid_axis(y0, h, y0, y1)
    return xs, ys


def best_probability_grid(
    scenario: "Scenario",
    positions: Sequence[Point2],
    h: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(xs, ys, P) where P[j, i] is the collective detection probability at
    lattice point (xs[i], ys[j])."""
    roi = scenario.roi
    sensing = scenario.sensing
    xs, ys = _global_lattice(roi, h)
    P = np.zeros((len(ys), len(xs)))
    for pos in positions:
        i0 = int(np.searchsorted(xs, pos.x - sensing.r_max - h))
        i1 = int(np.searchsorted(xs, pos.x + sensing.r_max + h))
        j0 = int(np.searchsorted(ys, pos.y - sensing.r_max - h))
        j1 = int(np.searchsorted(ys, pos.y + sensing.r_max + h))
        if i0 >= i1 or j0 >= j1:
            continue
        SX, SY = np.meshgrid(xs[i0:i1], ys[j0:j1])
        d = np.hypot(SX - pos.x, SY - pos.y)
        p = elfes_profile(sensing, d)
        if scenario.obstacles:
            vis = visibility_region(pos, roi, scenario.obstacles)
            p = p * vis.contains_xy(SX, SY)
        np.maximum(P[j0:j1, i0:i1], p, out=P[j0:j1, i0:i1])
    return xs, ys, P


def global_coverage(
    scenario: "Scenario",
    positions: Sequence[Point2],
    h: Optional[float] = None,
) -> tuple[float, float]:
    """Total weighted coverage F and the covered-area fraction of the
    obstacle-free field."""
    h = h if h is not None else scenario.quad.h_area
    xs, ys, P = best_probability_grid(scenario, positions, h)
    X, Y = np.meshgrid(xs, ys)
    in_field = field_region(scenario.roi, scenario.obstacles).contains_xy(X, Y)
    n_field = int(in_field.sum())
    if n_field == 0:
        return 0.0, 0.0
    phi = priority_field(scenario.priority, X, Y)
    F = float(np.sum(phi * P * in_field) * h * h)
    covered = int(np.sum((P > 0) & in_field))
    return F, covered / n_field


def priority_integral(scenario: "Scenario", h: Optional[float] = None) -> float:
    """Integral of the priority function over the obstacle-free field."""
    h = h if h is not None else scenario.quad.h_area
    xs, ys = _global_lattice(scenario.roi, h)
    X, Y = np.meshgrid(xs, ys)
    in_field = field_region(scenario.roi, scenario.obstacles).contains_xy(X, Y)
    phi = priority_field(scenario.priority, X, Y)
    return float(np.sum(phi * in_field) * h * h)


def weighted_coverage_factor(F: float, scenario: "Scenario", h: Optional[float] = None) -> float:
    denom = priority_integral(scenario, h)
    if denom <= 0:
        raise DomainError("priority function integrates to zero over the field")
    return float(np.clip(F / denom, 0.0, 1.0))


# ---------------------------------------------------------------------------
# coverage decomposition check

@dataclass(frozen=True)
class DecompositionReport:
    lhs: float
    rhs: float
    gap: float
    approximate: bool  # communication radius did not span the whole roi


def decomposition_check(
    scenario: "Scenario",
    positions: Sequence[Point2],
    quad: QuadratureConfig,
) -> DecompositionReport:
    """Compare global coverage against the sum of mobile refined-cell
    integrals plus stationary Voronoi-cell integrals, on one shared grid.

    With r_c spanning the roi both sides agree point-for-point (ties broken
    toward the lowest sensor id); with a smaller r_c the result is only
    approximate and flagged as such.
    """
    roi = scenario.roi
    sensing = scenario.sensing
    h = quad.h_area
    xs, ys = _global_lattice(roi, h)
    X, Y = np.meshgrid(xs, ys)
    X, Y = X.ravel(), Y.ravel()
    in_field = field_region(roi, scenario.obstacles).contains_xy(X, Y)
    phi = priority_field(scenario.priority, X, Y)

    n = len(positions)
    m = scenario.mobile_count
    d = np.empty((n, X.size))
    vis = np.ones((n, X.size), dtype=bool)
    for k, pos in enumerate(positions):
        d[k] = np.hypot(X - pos.x, Y - pos.y)
        if scenario.obstacles:
            vis[k] = visibility_region(pos, roi, scenario.obstacles).contains_xy(X, Y)
    p = elfes_profile(sensing, d) * vis

    lhs = float(np.sum(phi * p.max(axis=0) * in_field) * h * h)

    x0, y0, x1, y1 = roi.bounds
    diag = math.hypot(x1 - x0, y1 - y0)
    approximate = scenario.r_c < diag

    sensor_dist = np.array(
        [[distance(a, b) for b in positions] for a in positions]
    )
    rhs_field = np.zeros(X.size)
    for i in range(m):
        assigned = np.ones(X.size, dtype=bool)
        for j in range(m):
            if j == i or sensor_dist[i, j] > scenario.r_c:
                continue
            if i < j:
                assigned &= d[i] <= d[j]
            else:
                assigned &= d[i] < d[j]
        in_d_j = d <= sensing.r_max
        excluded = np.zeros(X.size, dtype=bool)
        for j in range(m, n):
            if sensor_dist[i, j] > scenario.r_c:
                continue
            excluded |= (d[j] < d[i]) & in_d_j[j] & vis[j]
        rhs_field += p[i] * assigned * ~excluded
    # stationary sensors integrate over their full Voronoi cells
    if m < n:
        nearest = d.argmin(axis=0)
        for k in range(m, n):
            rhs_field += p[k] * (nearest == k)
    rhs = float(np.sum(phi * rhs_field * in_field) * h * h)
    return DecompositionReport(lhs=lhs, rhs=rhs, gap=abs(lhs - rhs), approximate=approximate)
