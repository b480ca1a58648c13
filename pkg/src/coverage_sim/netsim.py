"""Round-based communication: disk graph, message delivery, connectivity.

Obstacles block sensing but not communication, and delivery within a round
is reliable and instantaneous; the graph is rebuilt from scratch every round
as mobile sensors reposition.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import DomainError, Point2


@dataclass(frozen=True)
class CommGraph:
    n: int
    r_c: float
    adjacency: np.ndarray  # (n, n) symmetric bool, no self-edges

    def edge(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i - 1, j - 1])


@dataclass(frozen=True)
class RoundMessage:
    """What a sensor shares with its neighbors each round."""

    sender: int
    position: Point2
    moved: bool


def build_graph(positions: Sequence[Point2], r_c: float) -> CommGraph:
    """Disk graph: sensors i, j are linked iff their distance is <= r_c."""
    if r_c <= 0:
        raise DomainError("communication radius must be positive")
    n = len(positions)
    xy = np.array([[p.x, p.y] for p in positions], dtype=float).reshape(n, 2)
    d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    adj = d <= r_c
    np.fill_diagonal(adj, False)
    return CommGraph(n=n, r_c=r_c, adjacency=adj)


def neighbors(graph: CommGraph, i: int) -> list[int]:
    """1-based ids of the sensors linked to sensor i."""
    if not (1 <= i <= graph.n):
        raise DomainError(f"sensor id {i} out of range 1..{graph.n}")
    return [j + 1 for j in np.flatnonzero(graph.adjacency[i - 1])]


def deliver_round(states, graph: CommGraph) -> list[list[RoundMessage]]:
    """Per-sensor inboxes: one RoundMessage from each neighbor.

    `states` is a sequence with `.spec.position` and `.moved`, indexed so
    that states[k] is the sensor with id k+1.  Nothing else crosses sensor
    boundaries.
    """
    msgs = [
        RoundMessage(sender=k + 1, position=s.spec.position, moved=s.moved)
        for k, s in enumerate(states)
    ]
    return [[msgs[j - 1] for j in neighbors(graph, i + 1)] for i in range(graph.n)]


def is_connected(graph: CommGraph) -> bool:
    """Breadth-first reachability of every sensor from the first."""
    if graph.n <= 1:
        return True
    seen = np.zeros(graph.n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        k = queue.popleft()
        for j in np.flatnonzero(graph.adjacency[k]):
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())
