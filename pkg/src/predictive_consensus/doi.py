"""Decentralized estimation of the second-largest eigenvalue of W.

Power iteration on a zero-mean start vector ``W v - v``. Every ``L`` rounds the
nodes rescale by the sup-norm, which they agree on exactly through
max-consensus on ``|v_i|``. The estimate is ``||W v_K||_inf / ||v_K||_inf``.

Arithmetic. W keeps the consensus direction with eigenvalue 1 while the
wanted mode shrinks by lambda2 per round, so in plain floating point the
rounding-level mean of ``v`` grows relative to the rest like
``lambda2**-k`` and eventually takes over the iteration. Here the rounds are
carried out in fixed point instead: values live on the grid ``2**-50``, every
edge (i, j) computes one quantized flow ``f = round(W_ij (v_j - v_i))`` that
node i adds and node j subtracts, and rescaling multiplies by a power of two.
All of these operations are exact on the grid, so the sum of ``v`` stays
exactly zero for any K.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .accel import LAMBDA2_MAX, AcceleratedOperator, PredictorParams, optimal_alpha
from .engine import max_consensus
from .errors import InvalidParameterError, PrecisionLossError
from .graph import Graph, diameter
from .weights import WeightMatrix

__all__ = ["DoiConfig", "DoiCost", "DoiResult", "estimate_lambda2", "end_to_end_alpha"]

log = logging.getLogger(__name__)

GRID_EXPONENT = -50
# Below this sup-norm (relative to the last rescale) fewer than ~20 bits of the
# vector remain on the grid.
PRECISION_FLOOR = 2.0**-30
# Below this only quantization noise is left.
ROUNDOFF_FLOOR = 2.0 ** (GRID_EXPONENT + 10)
ZERO_RESOLUTION = 1e-3


def _to_grid(x: np.ndarray) -> np.ndarray:
    # np.round is round-half-even, hence odd-symmetric: round(-a) == -round(a)
    return np.ldexp(np.round(np.ldexp(x, -GRID_EXPONENT)), GRID_EXPONENT)


@dataclass(frozen=True, eq=False)
class _ExactFlows:
    """Mean-conserving averaging round ``v_i + sum_j round(W_ij (v_j - v_i))``.

    With nonnegative weights and ``|v| < 2`` every partial sum stays below
    ``8 = 2**53 * 2**-50``, so the grid additions are exact.
    """

    n: int
    heads: np.ndarray
    tails: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_weight(cls, w: WeightMatrix, g: Graph) -> _ExactFlows:
        edges = np.array(g.edges(), dtype=np.intp).reshape(-1, 2)
        m = w.matrix
        if np.any(m < 0):
            raise InvalidParameterError("decentralized estimation needs a nonnegative weight matrix")
        return cls(n=g.n, heads=edges[:, 0], tails=edges[:, 1], weights=m[edges[:, 0], edges[:, 1]])

    def apply(self, v: np.ndarray) -> np.ndarray:
        f = _to_grid(self.weights * (v[self.tails] - v[self.heads]))
        return v + np.bincount(self.heads, weights=f, minlength=self.n) - np.bincount(
            self.tails, weights=f, minlength=self.n
        )


@dataclass(frozen=True)
class DoiConfig:
    """``K`` power iterations, sup-norm rescaling every ``L`` of them."""

    K: int
    L: int
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.K >= self.L >= 1):
            raise InvalidParameterError(f"need K >= L >= 1, got K={self.K}, L={self.L}")

    @classmethod
    def default_for(cls, g: Graph, seed: int = 0) -> DoiConfig:
        """K = 2N with L equal to the graph diameter."""
        k = 2 * g.n
        return cls(K=k, L=min(k, max(1, diameter(g))), seed=seed)


@dataclass(frozen=True)
class DoiCost:
    consensus_rounds: int
    max_consensus_runs: int
    max_consensus_rounds: int

    @property
    def total_rounds(self) -> int:
        return self.consensus_rounds + self.max_consensus_rounds

    def as_dict(self) -> dict:
        return {
            "consensus_rounds": self.consensus_rounds,
            "max_consensus_runs": self.max_consensus_runs,
            "max_consensus_rounds": self.max_consensus_rounds,
            "total_rounds": self.total_rounds,
        }


@dataclass(frozen=True)
class DoiResult:
    estimate: float
    cost: DoiCost


def _sup_norm(g: Graph, v: np.ndarray) -> tuple[float, int]:
    agreed, rounds = max_consensus(g, np.abs(v))
    return float(agreed[0]), rounds


def _power_of_two_scale(s: float) -> int:
    """Exponent k with ``s * 2**k`` in [1, 2)."""
    return 1 - math.frexp(s)[1]


def estimate_lambda2(
    w: WeightMatrix,
    g: Graph,
    cfg: DoiConfig,
    observer: Callable[[int, np.ndarray], None] | None = None,
) -> DoiResult:
    """Estimate lambda2(W) for W with |lambda_N| <= lambda_2.

    ``observer(k, v_k)``, if given, sees every iterate (``k = 0`` is the start
    vector ``W v - v``) after any rescaling.

    Round accounting: one averaging round for ``W v - v``, ``K`` for the power
    iterations and one for the final ``W v_K``. Max-consensus runs once per
    rescale (every ``L`` iterations, plus at ``K`` if ``L`` does not divide it)
    and once for ``||W v_K||_inf``.
    """
    if g.n != w.n:
        raise InvalidParameterError("graph and weight matrix sizes differ")
    flows = _ExactFlows.from_weight(w, g)
    rng = np.random.default_rng(cfg.seed)
    # W v - v in flow form: the sum of the flows, zero-mean exactly
    start = _to_grid(rng.uniform(-1.0, 1.0, g.n))
    v = flows.apply(start) - start
    consensus = 1
    mc_runs = 0
    mc_rounds = 0
    # Diagnostic only (not part of the protocol): sup-norm right after the last rescale.
    ref_scale = float(np.abs(v).max())
    if ref_scale == 0.0:
        raise PrecisionLossError("start vector W v - v vanished")
    if observer is not None:
        observer(0, v)

    def rescale(vec: np.ndarray, steps_since: int) -> tuple[np.ndarray, bool]:
        nonlocal mc_runs, mc_rounds
        s, r = _sup_norm(g, vec)
        mc_runs += 1
        mc_rounds += r
        if s <= PRECISION_FLOOR * ref_scale:
            # Collapsing to quantization noise within `steps_since` rounds proves
            # lambda2 <= ROUNDOFF_FLOOR**(1 / steps_since); report 0 when that is
            # below the resolution of the estimate.
            if s <= ROUNDOFF_FLOOR * ref_scale and ROUNDOFF_FLOOR ** (1.0 / steps_since) <= ZERO_RESOLUTION:
                return vec, True
            raise PrecisionLossError(
                f"vector shrank by {s / ref_scale:.1e} within {steps_since} rounds; use a smaller L (now {cfg.L})"
            )
        return np.ldexp(vec, _power_of_two_scale(s)), False

    since = 0
    for k in range(1, cfg.K + 1):
        v = flows.apply(v)
        consensus += 1
        since += 1
        if k % cfg.L == 0 or k == cfg.K:
            v, annihilated = rescale(v, since)
            if annihilated:
                # W maps the zero-mean subspace to (numerically) zero.
                return DoiResult(0.0, DoiCost(consensus, mc_runs, mc_rounds))
            ref_scale = float(np.abs(v).max())
            since = 0
        if observer is not None:
            observer(k, v)
    wv = flows.apply(v)
    consensus += 1
    num, r = _sup_norm(g, wv)
    mc_runs += 1
    mc_rounds += r
    return DoiResult(num / float(np.abs(v).max()), DoiCost(consensus, mc_runs, mc_rounds))


def end_to_end_alpha(
    w: WeightMatrix, g: Graph, theta: PredictorParams, cfg: DoiConfig
) -> AcceleratedOperator:
    """Accelerated operator whose mixing parameter uses the decentralized lambda2 estimate."""
    est = estimate_lambda2(w, g, cfg).estimate
    lam = min(max(est, 0.0), LAMBDA2_MAX)
    if lam != est:
        warnings.warn(f"lambda2 estimate {est!r} clamped to {lam!r}", RuntimeWarning, stacklevel=2)
    log.debug("doi lambda2 estimate %.12f (K=%d, L=%d)", est, cfg.K, cfg.L)
    return AcceleratedOperator(w, theta, optimal_alpha(lam, theta), lam)
