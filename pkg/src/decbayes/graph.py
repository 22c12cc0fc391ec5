"""Physical topology, overlay weight selection and connectivity checks.

Edge convention: ``(j, i)`` means agent ``i`` receives from agent ``j``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

ROW_TOL = 1e-12

STATIC_MODES = ("fully_connected", "star_posm", "star_negm", "no_collab")


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    m: int
    physical_neighbors: tuple[frozenset[int], ...]
    kind: str = "custom"
    center: Optional[int] = None

    def __post_init__(self):
        if self.m < 1:
            raise GraphError("topology needs at least one agent")
        if len(self.physical_neighbors) != self.m:
            raise GraphError(f"expected {self.m} neighbor sets, got {len(self.physical_neighbors)}")
        for i, nbrs in enumerate(self.physical_neighbors):
            if i in nbrs:
                raise GraphError(f"agent {i} lists itself as a physical neighbor")
            bad = [j for j in nbrs if not 0 <= j < self.m]
            if bad:
                raise GraphError(f"agent {i} has out-of-range neighbors {bad}")

    @classmethod
    def complete(cls, m: int) -> "Topology":
        return cls(m, tuple(frozenset(set(range(m)) - {i}) for i in range(m)), "complete")

    @classmethod
    def star(cls, m: int, center: int) -> "Topology":
        if not 0 <= center < m:
            raise GraphError(f"star center {center} out of range for m={m}")
        nbrs = [frozenset({center}) for _ in range(m)]
        nbrs[center] = frozenset(set(range(m)) - {center})
        return cls(m, tuple(nbrs), "star", center)

    @classmethod
    def from_edges(cls, m: int, edges: Iterable[tuple[int, int]]) -> "Topology":
        """Physical adjacency from ``(j, i)`` pairs; self-pairs are ignored."""
        nbrs: list[set[int]] = [set() for _ in range(m)]
        for j, i in edges:
            if not (0 <= j < m and 0 <= i < m):
                raise GraphError(f"edge ({j}, {i}) out of range for m={m}")
            if i != j:
                nbrs[i].add(j)
        return cls(m, tuple(frozenset(s) for s in nbrs), "custom")

    def edges(self) -> set[tuple[int, int]]:
        return {(j, i) for i, nbrs in enumerate(self.physical_neighbors) for j in nbrs}


def read_edge_list(path) -> list[tuple[int, int]]:
    """Parse ``j i`` pairs, one per line; blank lines and ``#`` comments skipped."""
    edges = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"{path}:{lineno}: expected 'j i', got {line!r}")
        try:
            j, i = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphError(f"{path}:{lineno}: non-integer agent id in {line!r}") from None
        if j < 0 or i < 0:
            raise GraphError(f"{path}:{lineno}: negative agent id")
        edges.append((j, i))
    return edges


def write_edge_list(path, edges: Iterable[tuple[int, int]]):
    lines = [f"{j} {i}" for j, i in sorted(edges)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    rows: np.ndarray
    delta: float

    def __post_init__(self):
        w = np.array(self.rows, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphError("weight matrix must be square")
        if np.any(w < 0):
            raise GraphError("weights must be nonnegative")
        if np.any(np.abs(w.sum(axis=1) - 1.0) > ROW_TOL):
            raise GraphError("weight matrix is not row-stochastic")
        if not 0 < self.delta < 1:
            raise GraphError("delta ∈ (0,1) violated")
        if np.any(np.diag(w) < self.delta):
            raise GraphError(f"self-weights must be at least delta={self.delta}")
        w.setflags(write=False)
        object.__setattr__(self, "rows", w)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    def respects(self, topology: Topology) -> bool:
        for i in range(self.m):
            allowed = topology.physical_neighbors[i] | {i}
            if any(self.rows[i, j] > 0 and j not in allowed for j in range(self.m)):
                return False
        return True

    def edges(self) -> set[tuple[int, int]]:
        """Directed ``(j, i)`` pairs with positive weight, self-loops included."""
        ii, jj = np.nonzero(self.rows > 0)
        return {(int(j), int(i)) for i, j in zip(ii, jj)}


@dataclass(frozen=True)
class OverlaySelection:
    """Each agent's chosen neighbor (``None`` when it has none) for one round."""

    chosen: tuple[Optional[int], ...]
    edges: frozenset[tuple[int, int]] = field(default=frozenset())

    @classmethod
    def from_choices(cls, chosen: Sequence[Optional[int]]) -> "OverlaySelection":
        edges = {(i, i) for i in range(len(chosen))}
        edges |= {(s, i) for i, s in enumerate(chosen) if s is not None}
        return cls(tuple(chosen), frozenset(edges))


def _check_delta(delta: float):
    if not 0 < delta < 1:
        raise GraphError(f"delta ∈ (0,1) violated: got {delta}")


def optimize_weights(
    agent: int,
    m: int,
    kl_to_neighbors: Mapping[int, float],
    delta: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, Optional[int]]:
    """Closed-form row of the relaxed weight problem for one agent.

    The agent keeps ``delta`` on itself and puts ``1 - delta`` on the neighbor
    whose intermediate belief diverges most from its own. Exact ties are broken
    uniformly at random with ``rng``. Returns the length-``m`` row and the
    selected neighbor (``None`` when the agent has no neighbors).
    """
    _check_delta(delta)
    row = np.zeros(m)
    if not kl_to_neighbors:
        row[agent] = 1.0
        return row, None
    for j, v in kl_to_neighbors.items():
        if j == agent or not 0 <= j < m:
            raise GraphError(f"invalid neighbor id {j} for agent {agent}")
        if not v >= 0:
            raise GraphError(f"KL to neighbor {j} is negative or NaN: {v}")
    best = max(kl_to_neighbors.values())
    ties = sorted(j for j, v in kl_to_neighbors.items() if v == best)
    chosen = ties[0] if len(ties) == 1 else int(ties[rng.integers(len(ties))])
    row[agent] = delta
    row[chosen] = 1.0 - delta
    return row, chosen


def static_weights(topology: Topology, mode: str, delta: float, center: Optional[int] = None) -> WeightMatrix:
    """Fixed weights for the baseline topologies.

    Every collaborative mode keeps ``delta`` on the self-loop and splits the
    remaining ``1 - delta`` uniformly over the agent's physical neighbors.
    """
    _check_delta(delta)
    m = topology.m
    if mode not in STATIC_MODES:
        raise GraphError(f"unknown static mode {mode!r}")
    if mode == "no_collab":
        return WeightMatrix(np.eye(m), delta)
    if mode in ("star_posm", "star_negm"):
        if topology.kind != "star":
            raise GraphError(f"{mode} requires a star topology, got {topology.kind}")
        if center is not None and topology.center != center:
            raise GraphError(f"{mode} expects center {center}, topology has {topology.center}")
    w = np.zeros((m, m))
    for i, nbrs in enumerate(topology.physical_neighbors):
        if not nbrs:
            w[i, i] = 1.0
            continue
        w[i, i] = delta
        share = (1.0 - delta) / len(nbrs)
        for j in nbrs:
            w[i, j] = share
    return WeightMatrix(w, delta)


def is_strongly_connected(edges: Iterable[tuple[int, int]], m: int) -> bool:
    if m <= 1:
        return True
    fwd: list[list[int]] = [[] for _ in range(m)]
    bwd: list[list[int]] = [[] for _ in range(m)]
    for j, i in edges:
        if not (0 <= j < m and 0 <= i < m):
            raise GraphError(f"edge ({j}, {i}) out of range for m={m}")
        fwd[j].append(i)
        bwd[i].append(j)

    def reaches_all(adj):
        seen = [False] * m
        seen[0] = True
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        return all(seen)

    return reaches_all(fwd) and reaches_all(bwd)


def check_b_window_connectivity(history: Sequence[Iterable[tuple[int, int]]], b: int, m: int) -> list[bool]:
    """Strong connectivity of the edge union over each full window of ``b`` rounds."""
    if b < 1:
        raise GraphError("window length b must be >= 1")
    report = []
    for start in range(0, len(history) - b + 1, b):
        union: set[tuple[int, int]] = set()
        for edges in history[start : start + b]:
            union.update(edges)
        report.append(is_strongly_connected(union, m))
    return report
