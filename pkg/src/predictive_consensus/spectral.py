"""Eigenstructure of W and of the two-tap accelerated operator.

The accelerated operator acts on the stacked memory vector ``[x(t); x(t-1)]``
through the block matrix ``[[W3, a*t1*I], [I, 0]]`` with
``W3 = (1 - a + a*t3) W + a*t2 I``. Each eigenvalue ``l`` of W yields the two
roots of ``z**2 - l3 z - a*t1 = 0`` where ``l3 = (1 - a + a*t3) l + a*t2``,
so the whole ``2N`` spectrum follows from the symmetric eigensolve of W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import ContractViolationError, InstabilityError, InvalidParameterError

__all__ = [
    "Spectrum",
    "PhiSpectrum",
    "symmetric_eigenvalues",
    "jacobi_eigenvalues",
    "eigenvalues_any",
    "rho_deviation",
    "phi_spectrum",
    "assemble_phi",
    "gelfand_radius_estimate",
]

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
GELFAND_RENORM_EVERY = 10
GELFAND_OVERFLOW_GUARD = 1e12
DISCRIMINANT_TOL = 64 * np.finfo(float).eps


class _Theta(Protocol):
    theta1: float
    theta2: float
    theta3: float


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Real eigenvalues of a symmetric matrix, sorted in descending order."""

    eigenvalues: np.ndarray

    def __post_init__(self) -> None:
        ev = np.array(self.eigenvalues, dtype=float)
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def __getitem__(self, i):
        return self.eigenvalues[i]

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[-1])

    def to_csv(self) -> str:
        rows = ["index,real,imag,modulus"]
        rows += [f"{i},{v:.17g},0,{abs(v):.17g}" for i, v in enumerate(self.eigenvalues)]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True, eq=False)
class PhiSpectrum:
    """The ``2N`` eigenvalues of the accelerated operator.

    ``roots[i] = (lambda*_i, lambda**_i)`` for the i-th eigenvalue of W (descending).
    """

    roots: np.ndarray
    lambdas3: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.roots.reshape(-1)

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.roots)

    @property
    def unit_index(self) -> tuple[int, int]:
        # The consensus mode: whichever root of the first pair sits at 1.
        first = self.roots[0]
        return (0, int(np.argmin(np.abs(first - 1.0))))

    @property
    def radius(self) -> float:
        """rho(Phi - J): largest modulus once the single unit root is dropped."""
        mod = self.moduli.copy()
        mod[self.unit_index] = -np.inf
        return float(mod.max())

    def __len__(self) -> int:
        return self.roots.size

    def to_csv(self) -> str:
        rows = ["index,real,imag,modulus"]
        for k, z in enumerate(self.eigenvalues):
            rows.append(f"{k},{z.real:.17g},{z.imag:.17g},{abs(z):.17g}")
        return "\n".join(rows) + "\n"


def _as_array(w) -> np.ndarray:
    return np.asarray(w, dtype=float)


def jacobi_eigenvalues(a, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """Cyclic Jacobi rotations until the off-diagonal mass is below ``tol * ||A||_F``.

    Intended for small matrices; O(n^3) per sweep.
    """
    a = np.array(_as_array(a), dtype=float)
    n = a.shape[0]
    if n == 1:
        return a.diagonal().copy()
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q])) + 1e-300:
                    # negligible coupling; dropping it also avoids overflow in tau
                    a[p, q] = a[q, p] = 0.0
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
    return np.sort(np.diag(a))[::-1]


def symmetric_eigenvalues(w, method: str = "lapack") -> Spectrum:
    """All eigenvalues of a symmetric matrix, descending.

    ``method="lapack"`` uses the LAPACK symmetric driver; ``"jacobi"`` the
    cyclic Jacobi iteration above.
    """
    a = _as_array(w)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolationError("eigenvalues need a square matrix")
    if not np.array_equal(a, a.T):
        if np.abs(a - a.T).max() > 1e-14 * max(1.0, np.abs(a).max()):
            raise ContractViolationError("matrix is not symmetric")
        a = 0.5 * (a + a.T)
    if method == "lapack":
        ev = np.linalg.eigvalsh(a)[::-1]
    elif method == "jacobi":
        ev = jacobi_eigenvalues(a)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return Spectrum(ev)


def eigenvalues_any(a) -> np.ndarray:
    """Eigenvalues of a square matrix; symmetric input takes the symmetric path."""
    a = _as_array(a)
    if np.array_equal(a, a.T):
        return np.linalg.eigvalsh(a)
    return np.linalg.eigvals(a)


def rho_deviation(w) -> float:
    """rho(W - J) for a symmetric doubly-stochastic W: max |lambda_i|, i >= 2."""
    ev = symmetric_eigenvalues(w).eigenvalues
    if len(ev) < 2:
        return 0.0
    return float(np.abs(ev[1:]).max())


def _lambdas(lambdas_w) -> np.ndarray:
    if isinstance(lambdas_w, Spectrum):
        return np.asarray(lambdas_w.eigenvalues)
    return np.asarray(lambdas_w, dtype=float)


def phi_spectrum(lambdas_w, theta: _Theta, alpha: float) -> PhiSpectrum:
    """Both quadratic roots per eigenvalue of W (given in descending order)."""
    lam = _lambdas(lambdas_w)
    l3 = (1.0 - alpha + alpha * theta.theta3) * lam + alpha * theta.theta2
    d = l3 * l3 + 4.0 * alpha * theta.theta1
    # At a double root (e.g. alpha = alpha*) the discriminant is pure roundoff and
    # its square root would be ~1e-8; treat it as the exact double root.
    d = np.where(np.abs(d) <= DISCRIMINANT_TOL * (l3 * l3 + 4.0 * abs(alpha * theta.theta1)), 0.0, d)
    disc = np.sqrt(d.astype(complex))
    roots = np.stack([0.5 * (l3 + disc), 0.5 * (l3 - disc)], axis=1)
    return PhiSpectrum(roots=roots, lambdas3=l3)


def assemble_phi(w, theta: _Theta, alpha: float) -> np.ndarray:
    """Explicit ``2N x 2N`` operator ``[[W3, a*t1*I], [I, 0]]``."""
    m = _as_array(w)
    n = m.shape[0]
    eye = np.eye(n)
    w3 = (1.0 - alpha + alpha * theta.theta3) * m + alpha * theta.theta2 * eye
    top = np.hstack([w3, alpha * theta.theta1 * eye])
    bottom = np.hstack([eye, np.zeros((n, n))])
    return np.vstack([top, bottom])


class _Operator(Protocol):
    theta: _Theta
    alpha: float

    def assemble(self) -> np.ndarray: ...


def gelfand_radius_estimate(op: _Operator, iters: int, seed: int) -> float:
    """Estimate rho(Phi - J) from the growth rate of ``Phi^t X`` on a deflated vector.

    The start vector is random with the consensus mode removed (projection along
    the left eigenvector ``[1; a*t1]``); the projection is reapplied at every
    sup-norm renormalization. The rate is measured over the second half of the
    run so the transient does not bias it.
    """
    if iters < 50:
        raise InvalidParameterError(f"iters must be >= 50, got {iters}")
    phi = op.assemble()
    n2 = phi.shape[0]
    n = n2 // 2
    at1 = op.alpha * op.theta.theta1
    if 1.0 + at1 == 0.0:
        raise InstabilityError("unit eigenvalue is defective at alpha = -1/theta1")
    left = np.concatenate([np.ones(n), np.full(n, at1)])
    right = np.ones(n2)

    def deflate(x: np.ndarray) -> np.ndarray:
        return x - right * (left @ x) / (left @ right)

    rng = np.random.default_rng(seed)
    x = deflate(rng.uniform(-1.0, 1.0, n2))
    x /= np.abs(x).max()
    log_growth = 0.0
    half = iters // 2
    log_at_half = 0.0
    for t in range(1, iters + 1):
        x = phi @ x
        if t % GELFAND_RENORM_EVERY == 0 or t == iters or t == half:
            s = np.abs(x).max()
            if not np.isfinite(s) or s > GELFAND_OVERFLOW_GUARD:
                raise InstabilityError("iteration diverges: alpha outside the stability range")
            if s == 0.0:
                return 0.0
            log_growth += math.log(s)
            if log_growth > math.log(GELFAND_OVERFLOW_GUARD):
                raise InstabilityError("iteration diverges: alpha outside the stability range")
            x = deflate(x / s)
            if t == half:
                log_at_half = log_growth
    est = math.exp((log_growth - log_at_half) / (iters - half))
    if est >= 1.0:
        raise InstabilityError(f"estimated radius {est:.6f} >= 1: alpha outside the stability range")
    return est
