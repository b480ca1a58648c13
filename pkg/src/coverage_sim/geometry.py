"""Planar geometry for the coverage simulator.

Everything downstream works on polygonal regions: Voronoi cells clipped to
the field, visibility polygons around obstacles, polygonized sensing disks,
and boolean combinations of all of the above.  Circular arcs are always
approximated by inscribed regular polygons so that a single polygon-boolean
code path (shapely/GEOS) serves every region computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import (
    GeometryCollection,
    LineString,
    MultiPolygon,
    Point as _SPoint,
    Polygon as _SPolygon,
)
from shapely.geometry.polygon import orient as _orient
from shapely.ops import nearest_points

EPS_GEOM = 1e-9  # coincidence tolerance for predicates, meters
DEFAULT_N_ARC = 64  # inscribed-polygon resolution for circles

# angular offset of the auxiliary sweep rays cast just beside each vertex
_SWEEP_EPS = 1e-7


class DomainError(ValueError):
    """An argument lies outside the operation's domain."""


class EmptyRegionError(DomainError):
    """No feasible position: the region queried is empty."""


@dataclass(frozen=True)
class Point2:
    """A point in the plane, meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DomainError(f"non-finite coordinates ({self.x}, {self.y})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


def distance(a: Point2, b: Point2) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def _unit(dx: float, dy: float) -> tuple[float, float]:
    n = math.hypot(dx, dy)
    if n < EPS_GEOM:
        raise DomainError("cannot normalize a zero-length vector")
    return dx / n, dy / n


@dataclass(frozen=True)
class SimplePolygon:
    """A simple polygon given by its vertices, normalized to CCW order."""

    vertices: tuple[Point2, ...]

    def __init__(self, vertices: Iterable[Point2 | tuple[float, float]]):
        pts = tuple(
            v if isinstance(v, Point2) else Point2(float(v[0]), float(v[1]))
            for v in vertices
        )
        if len(pts) < 3:
            raise DomainError("polygon needs at least 3 vertices")
        shell = _SPolygon([p.as_tuple() for p in pts])
        if not shell.is_valid or shell.area <= EPS_GEOM:
            raise DomainError("polygon is self-intersecting or degenerate")
        if _signed_area(pts) < 0:
            pts = pts[::-1]
        object.__setattr__(self, "vertices", pts)
        object.__setattr__(self, "_shapely", _SPolygon([p.as_tuple() for p in pts]))

    @property
    def shapely(self) -> _SPolygon:
        return self._shapely

    @property
    def area(self) -> float:
        return self._shapely.area

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return self._shapely.bounds

    def contains(self, p: Point2, tol: float = EPS_GEOM) -> bool:
        """Closed containment test (boundary counts as inside)."""
        sp = _SPoint(p.as_tuple())
        return bool(self._shapely.covers(sp)) or self._shapely.distance(sp) <= tol

    def edges(self) -> list[tuple[Point2, Point2]]:
        vs = self.vertices
        return [(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]


def _signed_area(pts: Sequence[Point2]) -> float:
    s = 0.0
    for i in range(len(pts)):
        a, b = pts[i], pts[(i + 1) % len(pts)]
        s += a.x * b.y - b.x * a.y
    return 0.5 * s


class PolyRegion:
    """A planar region: a set of simple polygons, possibly with holes.

    The universal geometric currency of the simulator (Voronoi cells,
    visibility regions, clipped sensing disks, and their boolean
    combinations).  Immutable after construction.
    """

    __slots__ = ("_geom", "_prepared")

    def __init__(self, geom=None):
        if geom is None:
            geom = MultiPolygon([])
        elif isinstance(geom, SimplePolygon):
            geom = geom.shapely
        elif isinstance(geom, PolyRegion):
            geom = geom._geom
        self._geom = _clean_polygonal(geom)
        self._prepared = False

    @classmethod
    def from_polygons(cls, outers: Iterable[SimplePolygon]) -> "PolyRegion":
        geoms = [o.shapely for o in outers]
        return cls(shapely.union_all(geoms) if geoms else None)

    @property
    def geom(self):
        return self._geom

    @property
    def is_empty(self) -> bool:
        return self._geom.is_empty

    @property
    def area(self) -> float:
        return self._geom.area

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        if self._geom.is_empty:
            raise EmptyRegionError("empty region has no bounds")
        return self._geom.bounds

    @property
    def outers(self) -> list[SimplePolygon]:
        return [SimplePolygon(poly.exterior.coords[:-1]) for poly in self._parts()]

    @property
    def holes(self) -> list[SimplePolygon]:
        out = []
        for poly in self._parts():
            for ring in poly.interiors:
                out.append(SimplePolygon(ring.coords[:-1]))
        return out

    def _parts(self) -> list[_SPolygon]:
        g = self._geom
        if g.is_empty:
            return []
        if isinstance(g, _SPolygon):
            return [g]
        return [p for p in g.geoms]

    def _prepare(self):
        if not self._prepared:
            shapely.prepare(self._geom)
            self._prepared = True

    def contains(self, p: Point2, tol: float = EPS_GEOM) -> bool:
        """Closed containment (within tol of the region counts)."""
        if self._geom.is_empty:
            return False
        sp = _SPoint(p.as_tuple())
        if self._geom.covers(sp):
            return True
        return self._geom.distance(sp) <= tol

    def contains_xy(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Vectorized interior test for grid classification."""
        if self._geom.is_empty:
            return np.zeros(np.shape(xs), dtype=bool)
        self._prepare()
        return shapely.contains_xy(self._geom, xs, ys)

    def boundary_length(self) -> float:
        return self._geom.boundary.length if not self._geom.is_empty else 0.0


def _clean_polygonal(geom):
    """Keep only polygonal parts with non-trivial area, normalized CCW."""
    if geom.is_empty:
        return MultiPolygon([])
    if not geom.is_valid:
        geom = shapely.make_valid(geom)
    parts = []
    stack = [geom]
    while stack:
        g = stack.pop()
        if isinstance(g, (MultiPolygon, GeometryCollection)):
            stack.extend(g.geoms)
        elif isinstance(g, _SPolygon) and g.area > 1e-12:
            parts.append(_orient(g, 1.0))
    if not parts:
        return MultiPolygon([])
    if len(parts) == 1:
        return parts[0]
    return MultiPolygon(parts)


# ---------------------------------------------------------------------------
# boolean operations

def region_intersect(a: PolyRegion, b: PolyRegion) -> PolyRegion:
    return PolyRegion(a.geom.intersection(b.geom))


def region_subtract(a: PolyRegion, b: PolyRegion) -> PolyRegion:
    return PolyRegion(a.geom.difference(b.geom))


# ---------------------------------------------------------------------------
# disks and half-planes

def polygonize_disk(center: Point2, radius: float, n_arc: int = DEFAULT_N_ARC) -> SimplePolygon:
    """Regular n_arc-gon inscribed in the circle of the given radius."""
    if radius <= 0:
        raise DomainError("disk radius must be positive")
    if n_arc < 8:
        raise DomainError("n_arc must be at least 8")
    ang = 2.0 * math.pi * np.arange(n_arc) / n_arc
    pts = [(center.x + radius * math.cos(a), center.y + radius * math.sin(a)) for a in ang]
    return SimplePolygon(pts)


def halfplane_region(anchor: Point2, other: Point2, extent: float) -> PolyRegion:
    """The half-plane of points at least as close to `anchor` as to `other`,
    realized as a large rectangle clipped later by whatever it intersects.

    `extent` must exceed the diameter of any region the result is used
    against.
    """
    mx, my = 0.5 * (anchor.x + other.x), 0.5 * (anchor.y + other.y)
    ux, uy = _unit(other.x - anchor.x, other.y - anchor.y)
    vx, vy = -uy, ux
    L = extent
    c1 = (mx + vx * L, my + vy * L)
    c2 = (mx - vx * L, my - vy * L)
    c3 = (mx - vx * L - ux * L, my - vy * L - uy * L)
    c4 = (mx + vx * L - ux * L, my + vy * L - uy * L)
    return PolyRegion(_SPolygon([c1, c2, c3, c4]))


# ---------------------------------------------------------------------------
# Voronoi cell from local competitor set

def voronoi_cell(self_pt: Point2, others: Sequence[Point2], roi: SimplePolygon) -> PolyRegion:
    """Intersection of the roi with the half-planes closer to `self_pt` than
    to each competitor in `others`."""
    if not roi.contains(self_pt):
        raise DomainError("generating point lies outside the roi")
    x0, y0, x1, y1 = roi.bounds
    diag = math.hypot(x1 - x0, y1 - y0)
    cell = roi.shapely
    for o in others:
        if not (math.isfinite(o.x) and math.isfinite(o.y)):
            raise DomainError("competitor with non-finite coordinates")
        if distance(self_pt, o) <= EPS_GEOM:
            raise DomainError("competitor coincides with the generating point")
        extent = 2.0 * (diag + distance(self_pt, o)) + 1.0
        hp = halfplane_region(self_pt, o, extent)
        cell = cell.intersection(hp.geom)
    return PolyRegion(cell)


# ---------------------------------------------------------------------------
# visibility

def _edges_array(polys: Sequence[SimplePolygon]) -> np.ndarray:
    """All edges of the given polygons as an (E, 4) array (ax, ay, bx, by)."""
    rows = []
    for poly in polys:
        for a, b in poly.edges():
            rows.append((a.x, a.y, b.x, b.y))
    if not rows:
        return np.zeros((0, 4))
    return np.asarray(rows, dtype=float)


def _ray_hits(px: float, py: float, dx: float, dy: float, edges: np.ndarray) -> np.ndarray:
    """Parameters t > 0 where the ray p + t*(dx,dy) crosses each edge.

    Returns an array of t values (non-crossing edges yield +inf).
    """
    ax, ay, bx, by = edges[:, 0], edges[:, 1], edges[:, 2], edges[:, 3]
    ex, ey = bx - ax, by - ay
    denom = dx * ey - dy * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((ax - px) * ey - (ay - py) * ex) / denom
        s = ((ax - px) * dy - (ay - py) * dx) / denom
    ok = (np.abs(denom) > 1e-15) & (s >= -1e-12) & (s <= 1.0 + 1e-12) & (t > 1e-12)
    return np.where(ok, t, np.inf)


def visibility_region(
    p: Point2,
    roi: SimplePolygon,
    obstacles: Sequence[SimplePolygon],
) -> PolyRegion:
    """Visible subset of the roi from p, with obstacles blocking sight lines.

    Angular sweep: rays are cast at every vertex direction (plus a pair of
    offset rays around each) and stopped at the nearest blocking edge; the
    ordered hit points form the star-shaped visibility polygon.
    """
    if not roi.contains(p):
        raise DomainError("viewpoint lies outside the roi")
    for ob in obstacles:
        if ob.shapely.contains(_SPoint(p.as_tuple())):
            raise DomainError("viewpoint lies inside an obstacle")
    if not obstacles:
        return PolyRegion(roi)

    edges = _edges_array([roi, *obstacles])
    angles = set()
    for poly in (roi, *obstacles):
        for v in poly.vertices:
            dx, dy = v.x - p.x, v.y - p.y
            if math.hypot(dx, dy) < EPS_GEOM:
                continue
            a = math.atan2(dy, dx)
            angles.update((a - _SWEEP_EPS, a, a + _SWEEP_EPS))
    hits = []
    for a in sorted(angles):
        dx, dy = math.cos(a), math.sin(a)
        t = _ray_hits(p.x, p.y, dx, dy, edges).min()
        if not math.isfinite(t):
            continue  # should not happen with p inside the roi
        hits.append((p.x + t * dx, p.y + t * dy))
    # drop consecutive duplicates
    pts = []
    for q in hits:
        if not pts or math.hypot(q[0] - pts[-1][0], q[1] - pts[-1][1]) > 1e-12:
            pts.append(q)
    if len(pts) >= 2 and math.hypot(pts[0][0] - pts[-1][0], pts[0][1] - pts[-1][1]) <= 1e-12:
        pts.pop()
    if len(pts) < 3:
        return PolyRegion()
    poly = _SPolygon(pts)
    if not poly.is_valid:
        poly = shapely.make_valid(poly)
    return PolyRegion(poly)


@dataclass(frozen=True)
class ShadowEdge:
    """A radial shadow segment cast past an occluding obstacle vertex.

    `inner` is the occluding vertex itself, `outer` the exit of the radial
    ray from the sensing region, and `occluded_side` the unit normal of the
    ray pointing into the occluded half-plane.
    """

    vertex: Point2
    inner: Point2
    outer: Point2
    occluded_side: Point2


def _cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


def _segment_blocked(p: Point2, v: Point2, obstacles: Sequence[SimplePolygon]) -> bool:
    """True if the open sight line from p to v passes through any obstacle
    interior.  The segment is shortened slightly at the v end so that a
    vertex of the obstacle itself does not count as blocking."""
    qx = p.x + (v.x - p.x) * (1.0 - 1e-9)
    qy = p.y + (v.y - p.y) * (1.0 - 1e-9)
    line = LineString([(p.x, p.y), (qx, qy)])
    for ob in obstacles:
        inter = ob.shapely.intersection(line)
        if inter.length > 1e-9:
            return True
    return False


def _ring_edges(region: PolyRegion) -> np.ndarray:
    rows = []
    for poly in region._parts():
        rings = [poly.exterior, *poly.interiors]
        for ring in rings:
            cs = ring.coords
            for i in range(len(cs) - 1):
                rows.append((cs[i][0], cs[i][1], cs[i + 1][0], cs[i + 1][1]))
    if not rows:
        return np.zeros((0, 4))
    return np.asarray(rows, dtype=float)


def occluding_vertices(
    p: Point2,
    obstacles: Sequence[SimplePolygon],
    sense_region: PolyRegion,
) -> list[ShadowEdge]:
    """Shadow edges anchored at the obstacle silhouette vertices seen from p.

    A vertex is a silhouette vertex when both incident edges lie strictly on
    the same side of the ray p->v; only vertices visible from p and whose
    outward shadow ray actually crosses `sense_region` produce an edge.
    """
    out: list[ShadowEdge] = []
    if sense_region.is_empty:
        return out
    region_edges = _ring_edges(sense_region)
    for ob in obstacles:
        if ob.shapely.contains(_SPoint(p.as_tuple())):
            raise DomainError("viewpoint lies inside an obstacle")
        vs = ob.vertices
        n = len(vs)
        for i, v in enumerate(vs):
            dx, dy = v.x - p.x, v.y - p.y
            rho = math.hypot(dx, dy)
            if rho < EPS_GEOM:
                continue
            prev_v, next_v = vs[i - 1], vs[(i + 1) % n]
            c1 = _cross(dx, dy, prev_v.x - v.x, prev_v.y - v.y)
            c2 = _cross(dx, dy, next_v.x - v.x, next_v.y - v.y)
            if c1 * c2 <= EPS_GEOM * EPS_GEOM:
                continue  # edges straddle the ray (or degenerate): not a silhouette
            if not sense_region.contains(v):
                continue
            if _segment_blocked(p, v, obstacles):
                continue
            ux, uy = dx / rho, dy / rho
            ts = _ray_hits(v.x, v.y, ux, uy, region_edges)
            t_exit = ts.min()
            if not math.isfinite(t_exit) or t_exit <= EPS_GEOM:
                continue
            outer = Point2(v.x + t_exit * ux, v.y + t_exit * uy)
            # occluded half = the side of the ray the obstacle body sits on
            side = 1.0 if c1 > 0 else -1.0
            occ = Point2(-uy * side, ux * side)
            out.append(ShadowEdge(vertex=v, inner=v, outer=outer, occluded_side=occ))
    return out


# ---------------------------------------------------------------------------
# projection

def project_to_region(p: Point2, region: PolyRegion) -> Point2:
    """p itself when inside, otherwise the closest boundary point."""
    if region.is_empty:
        raise EmptyRegionError("no feasible position: region is empty")
    sp = _SPoint(p.as_tuple())
    if region.geom.covers(sp):
        return p
    q, _ = nearest_points(region.geom.boundary, sp)
    return Point2(q.x, q.y)
