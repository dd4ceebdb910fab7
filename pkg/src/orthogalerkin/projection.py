"""Projection of the call payoff onto Hermite and Hermite x Laguerre spaces."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import roots_legendre

from ._errors import DomainError, NumericError
from .orthopoly import Family, QuadratureRule, basis_table, gauss_rule, hermite_norms_squared


class PayoffKind(str, Enum):
    EUROPEAN_CALL = "european_call"


@dataclass(frozen=True)
class PayoffSpec:
    """Call payoff (e^x - K)^+ in log-price x."""

    strike: float
    kind: PayoffKind = PayoffKind.EUROPEAN_CALL

    def __post_init__(self):
        object.__setattr__(self, "kind", PayoffKind(self.kind))
        if not (np.isfinite(self.strike) and self.strike > 0):
            raise DomainError(f"strike must be positive, got {self.strike!r}")

    def __call__(self, x):
        return np.maximum(np.exp(np.asarray(x, dtype=float)) - self.strike, 0.0)


@dataclass(frozen=True)
class ProjectionSettings:
    """How the coefficient integrals are evaluated.

    ``coefficient_quadrature_size=None`` means max(4(M+1), 64). With
    ``kink_split`` the integral is taken over [ln K, inf) only, by
    Gauss-Legendre on a truncated interval; otherwise a plain Gauss-Hermite
    rule over the whole line is used.
    """

    coefficient_quadrature_size: Optional[int] = None
    kink_split: bool = True

    def size_for(self, order: int) -> int:
        n = max(4 * (order + 1), 64) if self.coefficient_quadrature_size is None else self.coefficient_quadrature_size
        if int(n) != n or n < order + 2:
            raise DomainError(
                f"coefficient quadrature size {n} too small for order {order} (need >= {order + 2})"
            )
        return int(n)


def _kink_nodes(strike: float, order: int, size: int):
    """Gauss-Legendre nodes on the truncated half-line above the kink, weights times e^{-x^2}."""
    # outside |x| <= sqrt(2 order + 2) + 8 the weighted integrand is below
    # double precision relative to the coefficients
    half_width = math.sqrt(2.0 * order + 2.0) + 8.0
    a = max(math.log(strike), -half_width)
    b = max(half_width, a + 8.0)
    t, w = roots_legendre(size)
    x = 0.5 * (b - a) * t + 0.5 * (b + a)
    w = 0.5 * (b - a) * w * np.exp(-x * x)
    return x, w


def project_payoff_bs(payoff: PayoffSpec, M: int, settings: ProjectionSettings = ProjectionSettings()) -> np.ndarray:
    """Normalized Hermite coefficients c_k = <payoff, H_k>_w / (2^k k! sqrt(pi)), k = 0..M."""
    if int(M) != M or M < 0:
        raise DomainError(f"M must be a nonnegative integer, got {M!r}")
    n = settings.size_for(M)
    if settings.kink_split:
        x, w = _kink_nodes(payoff.strike, M, n)
        values = np.exp(x) - payoff.strike
    else:
        rule = gauss_rule(Family.HERMITE, n)
        x, w = rule.nodes, rule.weights
        values = payoff(x)
    table = basis_table(Family.HERMITE, M, x)
    coeffs = table @ (w * values) / hermite_norms_squared(M)
    if not np.all(np.isfinite(coeffs)):
        raise NumericError("non-finite payoff coefficients")
    return coeffs


def project_payoff_heston(payoff: PayoffSpec, M: int, N: int,
                          settings: ProjectionSettings = ProjectionSettings()) -> np.ndarray:
    """Coefficients c_{i,j} of the payoff in the H_i L_j basis, flat index i(N+1)+j."""
    if int(N) != N or N < 0:
        raise DomainError(f"N must be a nonnegative integer, got {N!r}")
    cx = project_payoff_bs(payoff, M, settings)
    # the payoff is constant in v; its Laguerre moments are exact with N+1 nodes
    vrule = gauss_rule(Family.LAGUERRE, N + 1)
    cv = basis_table(Family.LAGUERRE, N, vrule.nodes) @ vrule.weights
    if abs(cv[0] - 1.0) > 1e-12 or np.any(np.abs(cv[1:]) > 1e-12):
        raise NumericError("Laguerre moments of a constant are not (1, 0, ..., 0)")
    cv = np.where(np.arange(N + 1) == 0, 1.0, 0.0)
    return np.outer(cx, cv).ravel()


def _weighted_sum_of_squares(diff, log_weights):
    diff = np.asarray(diff, dtype=float)
    if not np.all(np.isfinite(diff)):
        raise NumericError("non-finite values in weighted L2 error")
    nz = diff != 0
    if not np.any(nz):
        return 0.0
    return float(np.sum(np.exp(log_weights[nz] + 2.0 * np.log(np.abs(diff[nz])))))


def weighted_l2_error(f_approx, f_ref, rules) -> float:
    """Weighted L2 distance ||f_approx - f_ref||_w by Gauss quadrature.

    ``rules`` is a single Hermite rule (functions of x) or a (Hermite, Laguerre)
    pair (functions of x, v evaluated on the tensor grid).
    """
    if isinstance(rules, QuadratureRule):
        rules = (rules,)
    rules = tuple(rules)
    if len(rules) == 1:
        x = rules[0].nodes
        diff = np.asarray(f_approx(x), dtype=float) - np.asarray(f_ref(x), dtype=float)
        logw = rules[0].log_weights
    elif len(rules) == 2:
        xx, vv = np.meshgrid(rules[0].nodes, rules[1].nodes, indexing="ij")
        diff = np.asarray(f_approx(xx, vv), dtype=float) - np.asarray(f_ref(xx, vv), dtype=float)
        logw = rules[0].log_weights[:, None] + rules[1].log_weights[None, :]
    else:
        raise DomainError("weighted_l2_error takes one or two quadrature rules")
    return math.sqrt(_weighted_sum_of_squares(np.broadcast_to(diff, logw.shape), logw))
