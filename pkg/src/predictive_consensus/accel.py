"""Two-tap predictor design and the optimal mixing parameter.

Notation used throughout: for an eigenvalue ``l`` of W and predictor
coefficients ``(t1, t2, t3)``, the eigenvalue of ``W3[a]`` is
``a_l + b_l * a`` with ``a_l = l`` and ``b_l = t2 + (t3 - 1) * l``. The pair of
operator eigenvalues for ``l`` turns complex exactly when
``(l + b_l a)**2 + 4 a t1 < 0``, i.e. for ``a`` between the two roots
``alpha_star_i <= alpha_dstar_i`` of that quadratic.
"""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field

import numpy as np

from .errors import (
    DegenerateParametersError,
    DomainError,
    InvalidParameterError,
    OutOfRangeError,
)
from .spectral import PhiSpectrum, assemble_phi, phi_spectrum, symmetric_eigenvalues
from .weights import WeightMatrix

__all__ = [
    "PredictorParams",
    "AcceleratedOperator",
    "least_squares_theta",
    "asymptotic_theta",
    "optimal_alpha",
    "optimal_alpha_closed_form",
    "alpha_region_bounds",
    "cost_J",
    "predicted_radius",
    "gamma",
    "LAMBDA2_MAX",
]

LAMBDA2_MAX = 1.0 - 1e-9
SUM_TOL = 1e-12


@dataclass(frozen=True)
class PredictorParams:
    """Predictor coefficients: ``x_P = t3 * x_W + t2 * x(t) + t1 * x(t-1)``."""

    theta1: float
    theta2: float
    theta3: float

    @property
    def sums_to_one(self) -> bool:
        return abs(self.theta1 + self.theta2 + self.theta3 - 1.0) <= SUM_TOL

    @property
    def admissible(self) -> bool:
        return self.sums_to_one and self.theta3 >= 1.0 and self.theta2 >= 0.0

    @property
    def alpha_max(self) -> float:
        """Upper end of the stability range ``[0, -1/theta1)``."""
        return math.inf if self.theta1 == 0.0 else -1.0 / self.theta1

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.theta1, self.theta2, self.theta3)

    def require_admissible(self) -> None:
        if not self.sums_to_one:
            raise InvalidParameterError(f"theta must sum to 1, got {self.as_tuple()}")
        if not self.admissible:
            raise InvalidParameterError(f"theta needs theta3 >= 1 and theta2 >= 0, got {self.as_tuple()}")
        if self.theta1 == 0.0:
            raise DegenerateParametersError("theta = (0, 0, 1) makes the predictor a no-op")


def least_squares_theta() -> PredictorParams:
    """theta = pinv(A).T @ B for the fixed two-tap design A = [[-2,-1,0],[1,1,1]].T, B = [1,1]."""
    a = np.array([[-2.0, -1.0, 0.0], [1.0, 1.0, 1.0]]).T
    b = np.ones(2)
    t1, t2, t3 = np.linalg.pinv(a).T @ b
    return PredictorParams(float(t1), float(t2), float(t3))


def asymptotic_theta(eps: float) -> PredictorParams:
    """(-eps, 0, 1 + eps): maximises the rate coefficient gamma for every eps > 0."""
    if not eps > 0:
        raise InvalidParameterError(f"eps must be positive, got {eps}")
    return PredictorParams(-eps, 0.0, 1.0 + eps)


def gamma(theta2: float, theta3: float) -> float:
    """Coefficient of sqrt(1 - lambda2) in ``1 - rho(Phi[a*] - J)`` as lambda2 -> 1."""
    den = theta3 - 1.0 + theta2
    if den <= 0.0:
        raise DegenerateParametersError("gamma is undefined for theta2 = 0, theta3 = 1")
    return math.sqrt((2.0 * (theta3 - 1.0) + theta2) / den)


def _check_lambda_i(lam: float) -> None:
    if not -1.0 <= lam <= 1.0:
        raise DomainError(f"eigenvalue must lie in [-1, 1], got {lam}")


def _bound_terms(lam: float, theta: PredictorParams) -> tuple[float, float, float]:
    """Return (p, r, b): roots are ``(p -/+ r) / b**2`` with p >= 0 when admissible."""
    t1 = theta.theta1
    b = theta.theta2 + (theta.theta3 - 1.0) * lam
    ab = lam * b
    p = -(ab + 2.0 * t1)
    r = 2.0 * math.sqrt(max(t1 * t1 + t1 * ab, 0.0))
    return p, r, b


def alpha_region_bounds(lambda_i: float, theta: PredictorParams) -> tuple[float, float]:
    """Endpoints ``(alpha_star_i, alpha_dstar_i)`` of the complex-eigenvalue region.

    The lower root is evaluated as ``l**2 / (p + r)``, the product-of-roots form,
    which stays accurate when ``b`` is small and returns ``alpha_dstar_i = inf``
    when the quadratic degenerates to a linear one (``b = 0``, or ``b**2``
    below the floating-point range).
    """
    theta.require_admissible()
    _check_lambda_i(lambda_i)
    p, r, b = _bound_terms(lambda_i, theta)
    lower = lambda_i * lambda_i / (p + r)
    b2 = b * b
    upper = math.inf if b2 == 0.0 else (p + r) / b2
    return lower, upper


def optimal_alpha(lambda2: float, theta: PredictorParams) -> float:
    """Mixing parameter minimising rho(Phi[a] - J); depends on W only through lambda2.

    ``lambda2 = 0`` gives 0 (the formula's limit when ``theta2 = 0``).
    """
    if lambda2 < 0.0:
        raise DomainError(f"lambda2 must be >= 0 (apply lazy_transform first), got {lambda2}")
    if lambda2 > LAMBDA2_MAX:
        raise DomainError(f"lambda2 must be <= 1 - 1e-9, got {lambda2!r}")
    return alpha_region_bounds(lambda2, theta)[0]


def optimal_alpha_closed_form(lambda2: float, theta: PredictorParams) -> float:
    """Direct transcription of the closed form, numerator over ``(t2 + (t3-1) l2)**2``.

    Kept as a cross-check for :func:`optimal_alpha`; loses accuracy as the
    denominator approaches zero.
    """
    t1, t2, t3 = theta.as_tuple()
    den = (t2 + (t3 - 1.0) * lambda2) ** 2
    if den == 0.0:
        raise DegenerateParametersError("denominator (theta2 + (theta3 - 1) lambda2)^2 vanishes")
    num = -((t3 - 1.0) * lambda2**2 + t2 * lambda2 + 2.0 * t1) - 2.0 * math.sqrt(
        max(t1 * t1 + t1 * lambda2 * (t2 + (t3 - 1.0) * lambda2), 0.0)
    )
    return num / den


def cost_J(alpha: float, lambda_i: float, theta: PredictorParams) -> float:
    """Largest modulus of the operator eigenvalue pair generated by ``lambda_i``."""
    theta.require_admissible()
    if not 0.0 <= alpha <= theta.alpha_max:
        raise OutOfRangeError(f"alpha must lie in [0, {theta.alpha_max}], got {alpha}")
    lower, _ = alpha_region_bounds(lambda_i, theta)
    if alpha >= lower:
        return math.sqrt(-alpha * theta.theta1)
    l3 = (1.0 - alpha + alpha * theta.theta3) * lambda_i + alpha * theta.theta2
    return 0.5 * (abs(l3) + math.sqrt(max(l3 * l3 + 4.0 * alpha * theta.theta1, 0.0)))


def predicted_radius(lambda2: float, theta: PredictorParams) -> float:
    """rho(Phi[a*] - J) = sqrt(-a* theta1)."""
    return math.sqrt(-optimal_alpha(lambda2, theta) * theta.theta1)


@dataclass(frozen=True)
class AcceleratedOperator:
    """Two-tap accelerated consensus operator defined by ``(W, theta, alpha)``.

    ``lambda2`` is the second-largest eigenvalue the operator was designed
    with; it defaults to the exact value of W. Pass ``validate=False`` to build
    an operator outside the stability range (for divergence tests).
    """

    weight: WeightMatrix
    theta: PredictorParams
    alpha: float
    lambda2: float = field(default=math.nan)
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        if math.isnan(self.lambda2):
            object.__setattr__(self, "lambda2", symmetric_eigenvalues(self.weight).lambda2)
        if validate:
            self.theta.require_admissible()
            if not 0.0 <= self.alpha < self.theta.alpha_max:
                raise OutOfRangeError(
                    f"alpha = {self.alpha} outside the stability range [0, {self.theta.alpha_max})"
                )
            if not 0.0 <= self.lambda2 < 1.0:
                raise DomainError(f"lambda2 must lie in [0, 1), got {self.lambda2}")

    @classmethod
    def optimal(
        cls, weight: WeightMatrix, theta: PredictorParams, lambda2: float | None = None
    ) -> AcceleratedOperator:
        """Operator at the optimal mixing parameter for ``lambda2`` (exact by default)."""
        spec = symmetric_eigenvalues(weight)
        if lambda2 is None:
            lambda2 = spec.lambda2
            if abs(spec.lambda_min) > lambda2 + 1e-12:
                raise DomainError("W violates |lambda_N| <= lambda_2; apply lazy_transform first")
        return cls(weight, theta, optimal_alpha(lambda2, theta), lambda2)

    @property
    def n(self) -> int:
        return self.weight.n

    def w3(self) -> np.ndarray:
        t = self.theta
        return (1.0 - self.alpha + self.alpha * t.theta3) * self.weight.matrix + self.alpha * t.theta2 * np.eye(self.n)

    def assemble(self) -> np.ndarray:
        return assemble_phi(self.weight.matrix, self.theta, self.alpha)

    def spectrum(self) -> PhiSpectrum:
        return phi_spectrum(symmetric_eigenvalues(self.weight), self.theta, self.alpha)

    def radius(self) -> float:
        return self.spectrum().radius
