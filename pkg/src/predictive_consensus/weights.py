"""Consensus weight matrices built from local (degree) information."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractViolationError, DisconnectedGraphError
from .graph import Graph, from_edges

__all__ = [
    "WeightMatrix",
    "LocalExchange",
    "ConditionReport",
    "metropolis_hastings",
    "max_degree",
    "lazy_transform",
    "check_conditions",
    "STOCHASTIC_TOL",
]

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Dense ``n x n`` consensus matrix, optionally tied to the graph it respects.

    The array is stored read-only. When ``graph`` is given, the sparsity
    pattern is checked against it on construction.
    """

    matrix: np.ndarray
    graph: Graph | None = None

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractViolationError(f"weight matrix must be square, got shape {m.shape}")
        if self.graph is not None:
            if self.graph.n != m.shape[0]:
                raise ContractViolationError("weight matrix and graph sizes differ")
            allowed = self.graph.adjacency_matrix() + np.eye(self.graph.n)
            if np.any((m != 0) & (allowed == 0)):
                raise ContractViolationError("nonzero weight on a non-edge")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @cached_property
    def exchange(self) -> LocalExchange:
        """Edge-wise message form of this matrix, used by the simulators."""
        return LocalExchange.from_weight(self)

    def to_csv(self) -> str:
        """Row-major dump with 17 significant digits."""
        return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in self.matrix)


@dataclass(frozen=True, eq=False)
class LocalExchange:
    """Per-edge message weights of W, grouped by receiving node.

    ``receivers[k]`` gets ``weights[k] * x[senders[k]]``; every (receiver,
    sender) pair is a graph edge.
    """

    n: int
    self_weights: np.ndarray
    receivers: np.ndarray
    senders: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_weight(cls, w: WeightMatrix) -> LocalExchange:
        g = w.graph if w.graph is not None else _pattern_graph(w)
        m = w.matrix
        recv, send = [], []
        for i, nbrs in enumerate(g.neighbor_lists):
            recv.extend([i] * len(nbrs))
            send.extend(nbrs)
        recv_a = np.array(recv, dtype=np.intp)
        send_a = np.array(send, dtype=np.intp)
        return cls(
            n=w.n,
            self_weights=m.diagonal().copy(),
            receivers=recv_a,
            senders=send_a,
            weights=m[recv_a, send_a] if len(recv_a) else np.zeros(0),
        )

    def apply(self, x: np.ndarray) -> np.ndarray:
        """One averaging round: ``W_ii x_i + sum_j W_ij x_j`` at every node."""
        incoming = np.bincount(self.receivers, weights=self.weights * x[self.senders], minlength=self.n)
        return self.self_weights * x + incoming


def _pattern_graph(w: WeightMatrix) -> Graph:
    m = w.matrix
    ii, jj = np.nonzero(np.triu((m != 0) | (m.T != 0), k=1))
    return from_edges(w.n, zip(ii.tolist(), jj.tolist()))


def _require_connected(g: Graph) -> None:
    if not g.is_connected():
        raise DisconnectedGraphError("weight construction requires a connected graph")


def metropolis_hastings(g: Graph) -> WeightMatrix:
    """W_ij = 1 / (1 + max(d_i, d_j)) on edges, diagonal fills rows to one."""
    _require_connected(g)
    d = g.degrees
    w = np.zeros((g.n, g.n))
    for i, j in g.edges():
        w[i, j] = w[j, i] = 1.0 / (1.0 + max(d[i], d[j]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return WeightMatrix(w, g)


def max_degree(g: Graph) -> WeightMatrix:
    """W_ij = 1 / (1 + d_max) on edges, W_ii = 1 - d_i / (1 + d_max)."""
    _require_connected(g)
    d = g.degrees
    c = 1.0 / (1.0 + d.max())
    w = g.adjacency_matrix() * c
    np.fill_diagonal(w, 1.0 - d / (1.0 + d.max()))
    return WeightMatrix(w, g)


def lazy_transform(w: WeightMatrix) -> WeightMatrix:
    """(I + W) / 2; maps every eigenvalue l to (1 + l) / 2."""
    return WeightMatrix(0.5 * (np.eye(w.n) + w.matrix), w.graph)


@dataclass(frozen=True)
class ConditionReport:
    """Convergence conditions of a weight matrix with the measured slack of each.

    ``ordering_slack`` is ``lambda_2 - |lambda_N|``; ``rho_slack`` is ``1 - rho(W - J)``.
    """

    doubly_stochastic: bool
    stochastic_error: float
    symmetric: bool
    symmetry_error: float
    rho_deviation: float
    contracting: bool
    rho_slack: float
    lambda2: float
    lambda_min: float
    ordering: bool
    ordering_slack: float

    @property
    def all_ok(self) -> bool:
        return self.doubly_stochastic and self.symmetric and self.contracting and self.ordering


def check_conditions(w: WeightMatrix | np.ndarray) -> ConditionReport:
    from .spectral import eigenvalues_any

    m = np.asarray(w, dtype=float)
    n = m.shape[0]
    stoch_err = float(max(np.abs(m.sum(axis=1) - 1).max(), np.abs(m.sum(axis=0) - 1).max()))
    sym_err = float(np.abs(m - m.T).max())
    j = np.full((n, n), 1.0 / n)
    rho = float(np.abs(eigenvalues_any(m - j)).max())
    lam = np.sort(np.real(eigenvalues_any(m)))[::-1]
    lam2 = float(lam[1]) if n > 1 else 0.0
    lam_min = float(lam[-1])
    return ConditionReport(
        doubly_stochastic=stoch_err <= STOCHASTIC_TOL,
        stochastic_error=stoch_err,
        symmetric=sym_err == 0.0,
        symmetry_error=sym_err,
        rho_deviation=rho,
        contracting=rho < 1.0 - 1e-12,
        rho_slack=1.0 - rho,
        lambda2=lam2,
        lambda_min=lam_min,
        ordering=abs(lam_min) <= lam2 + 1e-12,
        ordering_slack=lam2 - abs(lam_min),
    )
