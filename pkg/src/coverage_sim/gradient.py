"""Analytic gradient of a sensor's local coverage, and its finite-difference
cross-check.

The gradient splits into a surface term over the probabilistic decay
annulus, a line term along the sensing-range perimeter, and one term per
occluding obstacle vertex along its shadow ray.  The shadow-ray term is the
Leibniz boundary-motion term of the shadow line pivoting about the fixed
obstacle vertex: the integrand carries the lever arm (distance from the
vertex over the vertex's distance from the sensor) and the resulting vector
points toward the visible side of the ray, the direction in which moving
the sensor sweeps occluded area into view.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coverage import (
    CoverageRegion,
    LocalView,
    QuadratureConfig,
    grid_window,
    position_coverage,
    refined_cell,
)
from .field import PrioritySpec, elfes_profile, priority_field
from .geometry import (
    Point2,
    PolyRegion,
    ShadowEdge,
    occluding_vertices,
    polygonize_disk,
    region_intersect,
)

log = logging.getLogger(__name__)

_NUDGE = 1e-6  # inward offset for boundary-point membership tests, meters


@dataclass(frozen=True)
class GradientReport:
    """The three gradient contributions, their sum, and (optionally) the
    finite-difference estimate of the same quantity."""

    surface_term: np.ndarray
    boundary_term: np.ndarray
    obstacle_terms: tuple[np.ndarray, ...]
    total: np.ndarray
    fd_total: Optional[np.ndarray] = None


def gradient_surface(
    view: LocalView,
    region: CoverageRegion,
    priority: PrioritySpec,
    quad: QuadratureConfig,
) -> np.ndarray:
    """alpha * integral of n(q) phi(q) p(q) over the decay annulus."""
    pos = view.sensor.position
    if region.d_region.is_empty:
        return np.zeros(2)
    origin = view.roi.bounds[:2]
    X, Y = grid_window(origin, quad.h_area, region.d_region.bounds)
    mask = region.d_region.contains_xy(X, Y)
    if not mask.any():
        return np.zeros(2)
    X, Y = X[mask], Y[mask]
    dx, dy = X - pos.x, Y - pos.y
    d = np.hypot(dx, dy)
    ring = (d >= view.sensing.r_min) & (d > 1e-12)
    if not ring.any():
        return np.zeros(2)
    dx, dy, d = dx[ring], dy[ring], d[ring]
    w = priority_field(priority, X[ring], Y[ring]) * elfes_profile(view.sensing, d)
    scale = view.sensing.alpha * quad.h_area**2
    return scale * np.array([np.sum(w * dx / d), np.sum(w * dy / d)])


def gradient_boundary(
    view: LocalView,
    region: CoverageRegion,
    priority: PrioritySpec,
    quad: QuadratureConfig,
) -> np.ndarray:
    """Line integral of n(q) phi(q) p(r_max) along the sensing perimeter,
    restricted to the visible arcs inside pi_prime."""
    pos = view.sensor.position
    qx, qy, seg = _perimeter_samples(pos, view.sensing.r_max, quad.h_line)
    # nudge sample points slightly toward the sensor so membership tests do
    # not sit exactly on the region boundary
    tx = pos.x + (qx - pos.x) * (1.0 - _NUDGE)
    ty = pos.y + (qy - pos.y) * (1.0 - _NUDGE)
    keep = region.pi_prime.contains_xy(tx, ty) & region.visibility.contains_xy(tx, ty)
    if not keep.any():
        return np.zeros(2)
    qx, qy, seg = qx[keep], qy[keep], seg[keep]
    dx, dy = qx - pos.x, qy - pos.y
    d = np.hypot(dx, dy)
    w = priority_field(priority, qx, qy) * view.sensing.perimeter_probability * seg
    return np.array([np.sum(w * dx / d), np.sum(w * dy / d)])


def _perimeter_samples(pos: Point2, radius: float, h_line: float):
    """Midpoints and lengths of sub-segments of the polygonized circle."""
    ring = polygonize_disk(pos, radius).vertices
    mids_x, mids_y, lens = [], [], []
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        L = math.hypot(b.x - a.x, b.y - a.y)
        k = max(1, math.ceil(L / h_line))
        f = (np.arange(k) + 0.5) / k
        mids_x.append(a.x + f * (b.x - a.x))
        mids_y.append(a.y + f * (b.y - a.y))
        lens.append(np.full(k, L / k))
    return np.concatenate(mids_x), np.concatenate(mids_y), np.concatenate(lens)


def gradient_obstacle(
    view: LocalView,
    region: CoverageRegion,
    shadow: ShadowEdge,
    priority: PrioritySpec,
    quad: QuadratureConfig,
) -> np.ndarray:
    """Shadow-line sweep term for one occluding vertex.

    The line pivots about the vertex when the sensor moves, so each point
    on it sweeps proportionally to its distance from the vertex; area is
    gained on the visible side of the ray.
    """
    pos = view.sensor.position
    v = shadow.inner
    ex, ey = shadow.outer.x - v.x, shadow.outer.y - v.y
    L = math.hypot(ex, ey)
    if L < 1e-12:
        return np.zeros(2)
    ux, uy = ex / L, ey / L
    rho = math.hypot(v.x - pos.x, v.y - pos.y)
    if rho < 1e-12:
        return np.zeros(2)
    nvx, nvy = -shadow.occluded_side.x, -shadow.occluded_side.y
    k = max(1, math.ceil(L / quad.h_line))
    s = (np.arange(k) + 0.5) * (L / k)
    qx, qy = v.x + s * ux, v.y + s * uy
    tx, ty = qx + nvx * _NUDGE, qy + nvy * _NUDGE
    keep = region.pi_prime.contains_xy(tx, ty) & region.visibility.contains_xy(tx, ty)
    if not keep.any():
        return np.zeros(2)
    s, qx, qy = s[keep], qx[keep], qy[keep]
    d = np.hypot(qx - pos.x, qy - pos.y)
    w = priority_field(priority, qx, qy) * elfes_profile(view.sensing, d)
    total = float(np.sum((s / rho) * w) * (L / k))
    return total * np.array([nvx, nvy])


def local_gradient(
    view: LocalView,
    region: CoverageRegion,
    priority: PrioritySpec,
    quad: QuadratureConfig,
    with_fd: bool = False,
    h_fd: float = 1e-3,
) -> GradientReport:
    """Assemble the full gradient report for one sensor."""
    surface = gradient_surface(view, region, priority, quad)
    boundary = gradient_boundary(view, region, priority, quad)
    shadows = shadow_edges(view)
    obstacle_terms = tuple(
        gradient_obstacle(view, region, sh, priority, quad) for sh in shadows
    )
    total = surface + boundary
    for term in obstacle_terms:
        total = total + term
    fd = fd_gradient(view, priority, quad, h_fd, region=region) if with_fd else None
    return GradientReport(
        surface_term=surface,
        boundary_term=boundary,
        obstacle_terms=obstacle_terms,
        total=total,
        fd_total=fd,
    )


def shadow_edges(view: LocalView) -> list[ShadowEdge]:
    """Shadow edges of the sensor against a sensing-disk-in-roi region."""
    if not view.obstacles:
        return []
    pos = view.sensor.position
    sense = region_intersect(
        PolyRegion(polygonize_disk(pos, view.sensing.r_max)), PolyRegion(view.roi)
    )
    return occluding_vertices(pos, view.obstacles, sense)


def fd_gradient(
    view: LocalView,
    priority: PrioritySpec,
    quad: QuadratureConfig,
    h_fd: float,
    region: Optional[CoverageRegion] = None,
) -> np.ndarray:
    """Central differences of the local coverage under small displacements.

    The cell pi_prime is frozen at the current position (neighbors and
    hence bisectors held fixed); the sensing disk and visibility are
    recomputed at each displaced position via the smoothed evaluator.
    """
    if h_fd <= 0:
        raise ValueError("h_fd must be positive")
    if region is None:
        region = refined_cell(view)
    pos = view.sensor.position

    def feasible(p: Point2) -> bool:
        if not view.roi.contains(p):
            return False
        return not any(ob.shapely.contains(_point(p)) for ob in view.obstacles)

    def F(p: Point2) -> float:
        return position_coverage(
            p, region.pi_prime, view.roi, view.obstacles, view.sensing,
            priority, quad, smooth=True,
        )

    grad = np.zeros(2)
    for axis, (ex, ey) in enumerate(((1.0, 0.0), (0.0, 1.0))):
        plus = Point2(pos.x + h_fd * ex, pos.y + h_fd * ey)
        minus = Point2(pos.x - h_fd * ex, pos.y - h_fd * ey)
        ok_p, ok_m = feasible(plus), feasible(minus)
        if ok_p and ok_m:
            grad[axis] = (F(plus) - F(minus)) / (2.0 * h_fd)
        elif ok_p:
            log.warning("one-sided difference on axis %d: minus side infeasible", axis)
            grad[axis] = (F(plus) - F(pos)) / h_fd
        elif ok_m:
            log.warning("one-sided difference on axis %d: plus side infeasible", axis)
            grad[axis] = (F(pos) - F(minus)) / h_fd
        else:
            log.warning("both displacements infeasible on axis %d; returning 0", axis)
    return grad


def _point(p: Point2):
    from shapely.geometry import Point as _SPoint

    return _SPoint(p.x, p.y)
