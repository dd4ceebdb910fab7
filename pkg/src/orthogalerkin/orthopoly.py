"""Physicists' Hermite and standard Laguerre polynomials.

Evaluation by forward three-term recurrence, Clenshaw summation of series,
and Gauss rules built from the Jacobi matrix (Golub-Welsch).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import eigh_tridiagonal

from ._errors import DomainError, NumericError, RangeError

#: Largest Hermite degree whose squared norm 2^m m! sqrt(pi) fits in a double.
HERMITE_MAX_DEGREE = 150

_RESCALE = 1e100


class Family(str, Enum):
    HERMITE = "hermite"
    LAGUERRE = "laguerre"


@dataclass(frozen=True)
class BasisSpec:
    """Polynomial family together with the highest degree kept."""

    family: Family
    order: int

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if int(self.order) != self.order or self.order < 0:
            raise DomainError(f"order must be a nonnegative integer, got {self.order!r}")
        if self.family is Family.HERMITE and self.order > HERMITE_MAX_DEGREE:
            raise RangeError(
                f"Hermite order {self.order} exceeds the supported cap {HERMITE_MAX_DEGREE}"
            )


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule for the weight e^{-x^2} on R or e^{-v} on R+.

    Weights are kept as logarithms; for large Hermite rules the weights at the
    outermost nodes are below the smallest normal double.
    """

    family: Family
    nodes: np.ndarray
    log_weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("nodes", "log_weights"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)


def _recurrence(family: Family, n, x):
    """alpha(n, x), beta(n, x) with F_{n+1} = alpha F_n + beta F_{n-1}."""
    if family is Family.HERMITE:
        return 2.0 * x, -2.0 * n
    return (2 * n + 1 - x) / (n + 1), -n / (n + 1)


def _check_domain(family: Family, x) -> None:
    if family is Family.LAGUERRE and np.any(np.asarray(x) < 0):
        raise DomainError("Laguerre polynomials are evaluated on v >= 0")


def basis_table(family, order: int, points) -> np.ndarray:
    """All of F_0..F_order at ``points``; result has shape (order + 1, *points.shape)."""
    family = Family(family)
    x = np.asarray(points, dtype=float)
    out = np.empty((order + 1,) + x.shape)
    out[0] = 1.0
    if order >= 1:
        out[1] = 2.0 * x if family is Family.HERMITE else 1.0 - x
    for n in range(1, order):
        alpha, beta = _recurrence(family, n, x)
        out[n + 1] = alpha * out[n] + beta * out[n - 1]
    return out


def eval_basis(spec: BasisSpec, degree: int, point):
    """H_degree(point) or L_degree(point) by forward recurrence."""
    if not 0 <= degree <= spec.order:
        raise DomainError(f"degree {degree} outside 0..{spec.order}")
    _check_domain(spec.family, point)
    value = basis_table(spec.family, degree, point)[degree]
    return float(value) if np.ndim(value) == 0 else value


def norm_squared(spec: BasisSpec, degree: int) -> float:
    if degree < 0:
        raise DomainError("degree must be nonnegative")
    if spec.family is Family.LAGUERRE:
        return 1.0
    if degree > HERMITE_MAX_DEGREE:
        raise RangeError(f"2^m m! sqrt(pi) overflows for m = {degree}")
    return math.ldexp(math.factorial(degree) * math.sqrt(math.pi), degree)


def hermite_norms_squared(order: int) -> np.ndarray:
    spec = BasisSpec(Family.HERMITE, order)
    return np.array([norm_squared(spec, k) for k in range(order + 1)])


def clenshaw(spec: BasisSpec, coefficients, point):
    """Sum_k coefficients[k] F_k(point) by backward recurrence.

    ``coefficients`` may carry trailing axes; they broadcast against ``point``,
    which lets one call sum many series at once.
    """
    c = np.asarray(coefficients, dtype=float)
    if c.ndim == 0 or c.shape[0] == 0:
        raise DomainError("clenshaw needs at least one coefficient")
    _check_domain(spec.family, point)
    x = np.asarray(point, dtype=float)
    family = spec.family
    b1 = np.zeros(np.broadcast_shapes(c.shape[1:], x.shape))
    b2 = np.zeros_like(b1)
    for k in range(c.shape[0] - 1, -1, -1):
        alpha, _ = _recurrence(family, k, x)
        _, beta = _recurrence(family, k + 1, x)
        b1, b2 = c[k] + alpha * b1 + beta * b2, b1
    return float(b1) if b1.ndim == 0 else b1


def _jacobi(family: Family, size: int):
    """Diagonal, off-diagonal b_1..b_size, and log of the zeroth moment."""
    k = np.arange(size + 1, dtype=float)
    if family is Family.HERMITE:
        return np.zeros(size), np.sqrt(k[1:] / 2.0), 0.5 * math.log(math.pi)
    return 2.0 * k[:-1] + 1.0, k[1:].copy(), 0.0


def _orthonormal_sweep(diag, offdiag, log_mu0, x):
    """Evaluate the orthonormal recurrence at x with overflow-safe rescaling.

    Returns (p_n, p_n', log of the common scale, log sum_{k<n} p_k^2).
    """
    n = diag.size
    p_prev = np.zeros_like(x)
    p = np.full_like(x, math.exp(-0.5 * log_mu0))
    dp_prev = np.zeros_like(x)
    dp = np.zeros_like(x)
    total = np.zeros_like(x)
    log_scale = np.zeros_like(x)
    b = np.concatenate(([0.0], offdiag))
    for k in range(n):
        total += p * p
        p_next = ((x - diag[k]) * p - b[k] * p_prev) / b[k + 1]
        dp_next = (p + (x - diag[k]) * dp - b[k] * dp_prev) / b[k + 1]
        p_prev, p, dp_prev, dp = p, p_next, dp, dp_next
        big = np.abs(p) > _RESCALE
        if np.any(big):
            f = np.where(big, 1.0 / _RESCALE, 1.0)
            p_prev, p, dp_prev, dp = p_prev * f, p * f, dp_prev * f, dp * f
            total = total * f * f
            log_scale = log_scale - np.log(f)
    return p, dp, log_scale, np.log(total) + 2.0 * log_scale


def gauss_rule(family, size: int) -> QuadratureRule:
    """Gauss-Hermite (weight e^{-x^2}) or Gauss-Laguerre (weight e^{-v}) rule."""
    family = Family(family)
    if int(size) != size or size < 1:
        raise DomainError(f"quadrature size must be a positive integer, got {size!r}")
    diag, offdiag, log_mu0 = _jacobi(family, size)
    if size == 1:
        nodes = diag.copy()
    else:
        try:
            nodes = eigh_tridiagonal(diag, offdiag[:-1], eigvals_only=True)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"Jacobi eigenproblem failed for size {size}") from exc
    nodes = np.sort(nodes)
    if size > 1:
        # one Newton step on the degree-`size` orthonormal polynomial
        p, dp, _, _ = _orthonormal_sweep(diag, offdiag, log_mu0, nodes)
        step = np.divide(p, dp, out=np.zeros_like(p), where=dp != 0)
        if np.all(np.abs(step) < 1e-6 * (1 + np.abs(nodes))):
            nodes = nodes - step
    if family is Family.HERMITE:
        nodes = 0.5 * (nodes - nodes[::-1])
    _, _, _, log_sum = _orthonormal_sweep(diag, offdiag, log_mu0, nodes)
    log_weights = -log_sum
    if not np.all(np.isfinite(log_weights)):
        raise NumericError("non-finite quadrature weights")
    return QuadratureRule(family, nodes, log_weights)
