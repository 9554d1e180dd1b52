"""Synchronous node-level simulation of memoryless and two-tap accelerated consensus.

Every update is computed from messages exchanged along graph edges: a node's
new value depends on its own state and on the values sent by its neighbours,
never on a dense matrix product. The dense forms live only in the tests.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .accel import AcceleratedOperator
from .errors import DisconnectedGraphError, InvalidNodeError, InvalidParameterError
from .graph import Graph
from .weights import WeightMatrix

__all__ = [
    "NodeStates",
    "ExperimentTrace",
    "init_slope",
    "init_spike",
    "normalize_variance",
    "step_memoryless",
    "step_accelerated",
    "max_consensus",
    "run_to_accuracy",
    "mse",
    "to_db",
]


@dataclass(frozen=True)
class NodeStates:
    """Network state ``x(t)`` and ``x(t-1)``; at t = 0 both equal x(0)."""

    current: np.ndarray
    previous: np.ndarray

    @classmethod
    def initial(cls, x0) -> NodeStates:
        x = np.array(x0, dtype=float)
        return cls(x, x.copy())

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.current, self.previous])


@dataclass
class ExperimentTrace:
    """Per-iteration mean squared error ``||x(t) - mean(x(0))||^2 / N``, t = 0..T."""

    mse_linear: np.ndarray
    initial_average: float
    converged_at: int | None
    init_model: str = "custom"
    epsilon: float = math.nan
    final_state: np.ndarray | None = field(default=None, repr=False)

    @property
    def iterations_run(self) -> int:
        return len(self.mse_linear) - 1

    @property
    def mse_db(self) -> np.ndarray:
        return to_db(self.mse_linear)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["iter", "mse_linear", "mse_db"])
            for t, (lin, db) in enumerate(zip(self.mse_linear, self.mse_db)):
                wr.writerow([t, f"{lin:.17g}", f"{db:.17g}"])


def to_db(values) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(values, dtype=float))


def mse(x: np.ndarray, average: float) -> float:
    d = x - average
    return float(d @ d) / len(x)


def normalize_variance(x) -> np.ndarray:
    """Scale ``x`` so that its population variance is one."""
    x = np.asarray(x, dtype=float)
    sd = x.std()
    if sd == 0.0:
        raise InvalidParameterError("constant initial state cannot be variance-normalized")
    return x / sd


def slope_raw(g: Graph) -> np.ndarray:
    """Unnormalized slope field: coordinate sum (RGG, grid) or ``i / N`` (chain, other)."""
    if g.positions is not None:
        return g.positions.sum(axis=1)
    if g.kind == "grid":
        side = math.isqrt(g.n)
        idx = np.arange(g.n)
        return ((idx // side + 1) + (idx % side + 1)) / side
    return np.arange(1, g.n + 1) / g.n


def init_slope(g: Graph) -> np.ndarray:
    return normalize_variance(slope_raw(g))


def init_spike(g: Graph, node: int) -> np.ndarray:
    if not 0 <= node < g.n:
        raise InvalidNodeError(f"node {node} out of range [0, {g.n})")
    x = np.zeros(g.n)
    x[node] = 1.0
    return normalize_variance(x)


def step_memoryless(w: WeightMatrix, x: np.ndarray) -> np.ndarray:
    return w.exchange.apply(np.asarray(x, dtype=float))


def step_accelerated(op: AcceleratedOperator, states: NodeStates) -> NodeStates:
    """x_W = W x(t); x_P = t3 x_W + t2 x(t) + t1 x(t-1); x(t+1) = a x_P + (1-a) x_W."""
    t = op.theta
    x = states.current
    xw = op.weight.exchange.apply(x)
    xp = t.theta3 * xw + t.theta2 * x + t.theta1 * states.previous
    return NodeStates(op.alpha * xp + (1.0 - op.alpha) * xw, x)


def max_consensus(g: Graph, x) -> tuple[np.ndarray, int]:
    """Neighbourhood-max flooding until nothing changes.

    Returns the agreed vector and the number of rounds in which some node
    changed its value (0 for a constant input).
    """
    cur = np.array(x, dtype=float)
    recv = np.array([i for i, nb in enumerate(g.neighbor_lists) for _ in nb], dtype=np.intp)
    send = np.array([j for nb in g.neighbor_lists for j in nb], dtype=np.intp)
    rounds = 0
    for _ in range(g.n):
        new = cur.copy()
        np.maximum.at(new, recv, cur[send])
        if np.array_equal(new, cur):
            break
        cur = new
        rounds += 1
    if np.any(cur != cur.max()):
        raise DisconnectedGraphError("max-consensus did not reach agreement: graph disconnected")
    return cur, rounds


def _first_stable_index(ok: np.ndarray) -> int | None:
    if not ok[-1]:
        return None
    bad = np.nonzero(~ok)[0]
    return 0 if len(bad) == 0 else int(bad[-1]) + 1


def run_to_accuracy(
    op_or_w: AcceleratedOperator | WeightMatrix,
    x0,
    epsilon: float,
    max_iters: int | None = None,
    *,
    hold: int | None = None,
    init_model: str = "custom",
) -> ExperimentTrace:
    """Iterate from ``x0`` and record the error trace.

    ``converged_at`` is the first t at which the relative error
    ``||x(t) - mean(x0)|| / ||x0 - mean(x0)||`` is at most ``epsilon`` and stays
    there for every later simulated iteration. Without ``hold`` the run lasts
    ``max_iters`` (default 50 N memoryless, 20 N accelerated); with ``hold`` it
    stops once the error has stayed below ``epsilon`` for ``hold`` iterations.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    x = np.array(x0, dtype=float)
    n = len(x)
    avg = float(x.mean())
    e0 = mse(x, avg)
    if e0 == 0.0:
        raise InvalidParameterError("x0 is already at consensus")
    accelerated = isinstance(op_or_w, AcceleratedOperator)
    if max_iters is None:
        max_iters = (20 if accelerated else 50) * n
    threshold = epsilon * epsilon * e0

    errs = [e0]
    streak = 0
    if accelerated:
        states = NodeStates.initial(x)
        for _ in range(max_iters):
            states = step_accelerated(op_or_w, states)
            errs.append(mse(states.current, avg))
            streak = streak + 1 if errs[-1] <= threshold else 0
            if hold is not None and streak >= hold:
                break
        final = states.current
    else:
        ex = op_or_w.exchange
        for _ in range(max_iters):
            x = ex.apply(x)
            errs.append(mse(x, avg))
            streak = streak + 1 if errs[-1] <= threshold else 0
            if hold is not None and streak >= hold:
                break
        final = x
    arr = np.array(errs)
    return ExperimentTrace(
        mse_linear=arr,
        initial_average=avg,
        converged_at=_first_stable_index(arr <= threshold),
        init_model=init_model,
        epsilon=epsilon,
        final_state=final,
    )
