"""Run trace records shared by the deployment loop and the shell."""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import Point2


@dataclass(frozen=True)
class TraceRecord:
    """One row of a deployment run: iteration counter, the full position
    snapshot, KPIs, and round bookkeeping."""

    t: int
    positions: tuple[Point2, ...]
    coverage: float  # total weighted coverage F
    weighted_factor: float
    area_factor: float
    moved_count: int
    converged_count: int
    connected: bool


@dataclass(frozen=True)
class RunTrace:
    records: tuple[TraceRecord, ...]
    final_positions: tuple[Point2, ...]
    termination: str  # "converged" or "max_iters"

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    @property
    def initial(self) -> TraceRecord:
        return self.records[0]
