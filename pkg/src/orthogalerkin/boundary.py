"""Boundary values at v = 0 from the degenerate transport equation.

With c = kappa theta / h the boundary value is

    u_B(x, T) = e^{-(c + r) T} (e^x - K)^+
                + c int_0^T e^{-(c + r)(T - s)} u(x + r (T - s), h, s) ds,

written so that every exponent is nonpositive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from ._errors import DomainError, NumericError
from .galerkin_heston import HestonParams, eval_heston_solution
from .projection import PayoffSpec


@dataclass(frozen=True)
class BoundarySettings:
    h: float = 0.005
    time_quadrature_size: int = 64

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise DomainError(f"h must be positive, got {self.h!r}")
        if int(self.time_quadrature_size) != self.time_quadrature_size or self.time_quadrature_size < 1:
            raise DomainError("time_quadrature_size must be a positive integer")


def transport_solution(kappa_theta: float, r: float, payoff: PayoffSpec, interior, x, T: float,
                       settings: BoundarySettings = BoundarySettings()):
    """u_B(x, T) for a given kappa*theta >= 0; kappa*theta = 0 skips the integral."""
    if kappa_theta < 0:
        raise DomainError("kappa * theta must be nonnegative")
    if not T > 0:
        raise DomainError("T must be positive")
    x = np.asarray(x, dtype=float)
    c = kappa_theta / settings.h
    out = math.exp(-(c + r) * T) * payoff(x)
    if c > 0:
        t, w = roots_legendre(settings.time_quadrature_size)
        s = 0.5 * T * (t + 1.0)
        w = 0.5 * T * w
        for s_q, w_q in zip(s, w):
            lag = T - s_q
            values = c * math.exp(-(c + r) * lag) * np.asarray(interior(x + r * lag, s_q), dtype=float)
            if not np.all(np.isfinite(values)):
                raise NumericError(f"non-finite boundary integrand at time {s_q}")
            out = out + w_q * values
    return float(out) if out.ndim == 0 else out


def boundary_solution(params: HestonParams, payoff: PayoffSpec, interior, x, T: float,
                      settings: BoundarySettings = BoundarySettings()):
    """u_B(x, 0, T) driven by ``interior(x, tau)`` = u(x, h, tau)."""
    return transport_solution(params.kappa * params.theta, params.r, payoff, interior, x, T, settings)


def galerkin_interior(path, M: int, N: int, h: float):
    """interior(x, tau) from a Heston coefficient path evaluated at v = h."""
    def interior(x, tau):
        return eval_heston_solution(path(tau), M, N, x, h)
    return interior
