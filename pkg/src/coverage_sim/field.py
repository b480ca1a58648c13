"""Sensing probability, priority weighting, and collective sensing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import DomainError, Point2, PolyRegion, distance


@dataclass(frozen=True)
class SensingParams:
    """Probabilistic disk sensing: certain detection within r_min,
    exponential decay with rate alpha out to r_max, nothing beyond."""

    r_min: float
    r_max: float
    alpha: float

    def __post_init__(self):
        if not (0 < self.r_min <= self.r_max):
            raise DomainError("sensing radii must satisfy 0 < r_min <= r_max")
        if self.alpha <= 0:
            raise DomainError("sensing decay rate alpha must be positive")

    @property
    def perimeter_probability(self) -> float:
        """Detection probability in the limit approaching r_max from inside."""
        return math.exp(-self.alpha * (self.r_max - self.r_min))


def elfes_probability(params: SensingParams, d: float) -> float:
    """Detection probability at distance d from the sensor."""
    if d < 0:
        raise DomainError("distance must be non-negative")
    if d <= params.r_min:
        return 1.0
    if d <= params.r_max:
        return math.exp(-params.alpha * (d - params.r_min))
    return 0.0


def elfes_profile(params: SensingParams, d: np.ndarray, cutoff: bool = True) -> np.ndarray:
    """Vectorized detection probability over an array of distances.

    With cutoff=False the exponential branch continues past r_max, which the
    smoothed quadrature uses together with an explicit boundary ramp.
    """
    d = np.asarray(d, dtype=float)
    p = np.exp(-params.alpha * np.maximum(d - params.r_min, 0.0))
    if cutoff:
        p = np.where(d > params.r_max, 0.0, p)
    return p


@dataclass(frozen=True)
class GaussianComponent:
    center: Point2
    decay: float  # 1/m^2

    def __post_init__(self):
        if self.decay <= 0:
            raise DomainError("gaussian decay must be positive")


@dataclass(frozen=True)
class PrioritySpec:
    """Non-negative importance weighting over the field.

    Variants: uniform (weight 1 everywhere), max_of_gaussians (pointwise max
    of isotropic gaussian bumps), raster (bilinear interpolation of a grid of
    weights, zero outside its extent).
    """

    variant: str
    components: tuple[GaussianComponent, ...] = ()
    raster_origin: Optional[Point2] = None
    raster_cell: float = 0.0
    raster_weights: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        if self.variant not in ("uniform", "max_of_gaussians", "raster"):
            raise DomainError(f"unknown priority variant {self.variant!r}")
        if self.variant == "max_of_gaussians" and not self.components:
            raise DomainError("max_of_gaussians needs at least one component")
        if self.variant == "raster":
            if self.raster_origin is None or self.raster_cell <= 0:
                raise DomainError("raster priority needs an origin and a positive cell size")
            w = np.asarray(self.raster_weights, dtype=float)
            if w.ndim != 2 or w.size == 0:
                raise DomainError("raster weights must form a 2-D grid")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise DomainError("raster weights must be finite and non-negative")

    @classmethod
    def uniform(cls) -> "PrioritySpec":
        return cls(variant="uniform")

    @classmethod
    def max_of_gaussians(cls, components: Sequence[tuple[Point2, float]]) -> "PrioritySpec":
        return cls(
            variant="max_of_gaussians",
            components=tuple(GaussianComponent(c, d) for c, d in components),
        )

    @classmethod
    def raster(cls, origin: Point2, cell: float, weights) -> "PrioritySpec":
        return cls(
            variant="raster",
            raster_origin=origin,
            raster_cell=cell,
            raster_weights=tuple(tuple(float(x) for x in row) for row in weights),
        )


def priority(spec: PrioritySpec, q: Point2) -> float:
    return float(priority_field(spec, np.array([q.x]), np.array([q.y]))[0])


def priority_field(spec: PrioritySpec, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized priority evaluation on arrays of coordinates."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if spec.variant == "uniform":
        return np.ones_like(xs)
    if spec.variant == "max_of_gaussians":
        best = np.zeros_like(xs)
        for comp in spec.components:
            d2 = (xs - comp.center.x) ** 2 + (ys - comp.center.y) ** 2
            np.maximum(best, np.exp(-comp.decay * d2), out=best)
        return best
    # raster: bilinear interpolation on nodes origin + (i, j) * cell
    w = np.asarray(spec.raster_weights, dtype=float)  # [row=j][col=i]
    nj, ni = w.shape
    gx = (xs - spec.raster_origin.x) / spec.raster_cell
    gy = (ys - spec.raster_origin.y) / spec.raster_cell
    inside = (gx >= 0) & (gx <= ni - 1) & (gy >= 0) & (gy <= nj - 1)
    gx = np.clip(gx, 0, ni - 1)
    gy = np.clip(gy, 0, nj - 1)
    i0 = np.clip(np.floor(gx).astype(int), 0, ni - 2) if ni > 1 else np.zeros_like(gx, dtype=int)
    j0 = np.clip(np.floor(gy).astype(int), 0, nj - 2) if nj > 1 else np.zeros_like(gy, dtype=int)
    fx = gx - i0
    fy = gy - j0
    i1 = np.minimum(i0 + 1, ni - 1)
    j1 = np.minimum(j0 + 1, nj - 1)
    val = (
        w[j0, i0] * (1 - fx) * (1 - fy)
        + w[j0, i1] * fx * (1 - fy)
        + w[j1, i0] * (1 - fx) * fy
        + w[j1, i1] * fx * fy
    )
    return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class SensorSpec:
    """One sensor of the roster: 1-based id, position, mobility flag.

    By convention mobile sensors carry the low ids 1..m and stationary
    sensors m+1..n."""

    id: int
    position: Point2
    mobile: bool


def collective_probability(
    params: SensingParams,
    q: Point2,
    sensors: Sequence[tuple[SensorSpec, PolyRegion]],
) -> float:
    """Best detection probability of q over sensors paired with their
    visibility-clipped sensing regions D(s)."""
    best = 0.0
    for spec, region in sensors:
        if not region.contains(q):
            continue
        p = elfes_probability(params, distance(spec.position, q))
        if p > best:
            best = p
    return best
