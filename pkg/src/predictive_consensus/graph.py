"""Undirected network topologies: chain, 2-D grid and random geometric graph.

Graphs are immutable. Node ids are ``0..n-1`` and each node keeps a sorted
tuple of neighbours; positions in the unit square are kept only for random
geometric graphs.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ContractViolationError,
    DisconnectedGraphError,
    GenerationFailureError,
    InvalidSizeError,
)

__all__ = [
    "Graph",
    "make_chain",
    "make_grid",
    "make_rgg",
    "make_complete",
    "make_star",
    "from_edges",
    "diameter",
    "rgg_radius",
    "RGG_MAX_RETRIES",
]

RGG_MAX_RETRIES = 200


@dataclass(frozen=True)
class Graph:
    """Connected undirected simple graph.

    Attributes:
        n: number of nodes.
        neighbor_lists: ``neighbor_lists[i]`` is the sorted tuple of nodes adjacent to ``i``.
        positions: ``(n, 2)`` read-only array of coordinates (random geometric graphs only).
        kind: topology tag, one of ``chain``, ``grid``, ``rgg``, ``custom``.
        retries: number of regenerations needed to obtain a connected RGG sample.
    """

    n: int
    neighbor_lists: tuple[tuple[int, ...], ...]
    positions: np.ndarray | None = field(default=None, compare=False, repr=False)
    kind: str = "custom"
    retries: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidSizeError(f"graph needs at least one node, got n={self.n}")
        if len(self.neighbor_lists) != self.n:
            raise ContractViolationError("one neighbour list per node is required")
        for i, nbrs in enumerate(self.neighbor_lists):
            if list(nbrs) != sorted(set(nbrs)):
                raise ContractViolationError(f"neighbours of node {i} must be sorted and unique")
            for j in nbrs:
                if not 0 <= j < self.n:
                    raise ContractViolationError(f"node id {j} out of range")
                if j == i:
                    raise ContractViolationError(f"self-loop at node {i}")
                if i not in self.neighbor_lists[j]:
                    raise ContractViolationError(f"edge ({i}, {j}) is not symmetric")
        if self.positions is not None:
            pos = np.array(self.positions, dtype=float)
            if pos.shape != (self.n, 2):
                raise ContractViolationError("positions must have shape (n, 2)")
            pos.setflags(write=False)
            object.__setattr__(self, "positions", pos)

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbor_lists], dtype=int)

    def neighbors(self, node: int) -> tuple[int, ...]:
        return self.neighbor_lists[node]

    def edges(self) -> list[tuple[int, int]]:
        """Edges ``(i, j)`` with ``i < j`` in ascending order."""
        return [(i, j) for i, nbrs in enumerate(self.neighbor_lists) for j in nbrs if i < j]

    @property
    def num_edges(self) -> int:
        return sum(len(nb) for nb in self.neighbor_lists) // 2

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, j in self.edges():
            a[i, j] = a[j, i] = 1.0
        return a

    def is_connected(self) -> bool:
        return len(_bfs_distances(self, 0)) == self.n

    def to_edge_list(self) -> str:
        """Plain-text dump: first line ``n``, then one ``i j`` pair per line."""
        lines = [str(self.n)] + [f"{i} {j}" for i, j in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> Graph:
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows:
            raise ContractViolationError("empty edge list")
        n = int(rows[0][0])
        return from_edges(n, ((int(a), int(b)) for a, b in rows[1:]))


def from_edges(
    n: int,
    edges: Iterable[tuple[int, int]],
    *,
    positions: np.ndarray | None = None,
    kind: str = "custom",
    retries: int = 0,
) -> Graph:
    adj: list[set[int]] = [set() for _ in range(n)]
    for i, j in edges:
        if i == j:
            raise ContractViolationError(f"self-loop at node {i}")
        if not (0 <= i < n and 0 <= j < n):
            raise ContractViolationError(f"edge ({i}, {j}) out of range for n={n}")
        adj[i].add(j)
        adj[j].add(i)
    return Graph(
        n=n,
        neighbor_lists=tuple(tuple(sorted(s)) for s in adj),
        positions=positions,
        kind=kind,
        retries=retries,
    )


def make_chain(n: int) -> Graph:
    """Path graph on ``n`` nodes."""
    if n < 2:
        raise InvalidSizeError(f"chain requires n >= 2, got {n}")
    return from_edges(n, ((i, i + 1) for i in range(n - 1)), kind="chain")


def make_grid(side: int) -> Graph:
    """``side x side`` four-neighbour lattice; node ``r * side + c``."""
    if side < 2:
        raise InvalidSizeError(f"grid requires side >= 2, got {side}")
    edges = []
    for r in range(side):
        for c in range(side):
            u = r * side + c
            if c + 1 < side:
                edges.append((u, u + 1))
            if r + 1 < side:
                edges.append((u, u + side))
    return from_edges(side * side, edges, kind="grid")


def make_complete(n: int) -> Graph:
    if n < 2:
        raise InvalidSizeError(f"complete graph requires n >= 2, got {n}")
    return from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))


def make_star(n: int) -> Graph:
    """Node 0 is the hub."""
    if n < 2:
        raise InvalidSizeError(f"star requires n >= 2, got {n}")
    return from_edges(n, ((0, j) for j in range(1, n)))


def rgg_radius(n: int) -> float:
    """Connectivity radius sqrt(2 log n / n)."""
    return math.sqrt(2.0 * math.log(n) / n)


def _rgg_sample(n: int, rng: np.random.Generator) -> tuple[np.ndarray, list[tuple[int, int]]]:
    pos = rng.random((n, 2))
    r = rgg_radius(n)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    ii, jj = np.nonzero(np.triu(dist <= r, k=1))
    return pos, list(zip(ii.tolist(), jj.tolist()))


def make_rgg(n: int, seed: int, *, max_retries: int = RGG_MAX_RETRIES) -> Graph:
    """Random geometric graph in the unit square with radius sqrt(2 log n / n).

    Disconnected samples are discarded and redrawn from the derived seed
    ``SeedSequence([seed, attempt])``; the number of discarded samples is kept
    in ``Graph.retries``.
    """
    if n < 2:
        raise InvalidSizeError(f"random geometric graph requires n >= 2, got {n}")
    for attempt in range(max_retries + 1):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt]))
        pos, edges = _rgg_sample(n, rng)
        g = from_edges(n, edges, positions=pos, kind="rgg", retries=attempt)
        if g.is_connected():
            return g
    raise GenerationFailureError(
        f"no connected RGG sample for n={n}, seed={seed} after {max_retries} retries"
    )


def _bfs_distances(g: Graph, source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.neighbor_lists[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def eccentricities(g: Graph) -> Sequence[int]:
    out = []
    for s in range(g.n):
        dist = _bfs_distances(g, s)
        if len(dist) != g.n:
            raise DisconnectedGraphError("graph is disconnected: diameter is infinite")
        out.append(max(dist.values()))
    return out


def diameter(g: Graph) -> int:
    """Largest shortest-path hop count over all node pairs."""
    return max(eccentricities(g))
