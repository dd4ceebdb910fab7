"""Hermite-Galerkin discretization of the Black-Scholes equation in x = ln S."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._errors import DomainError
from .numerics import BandedMatrix, LinearEvolution, Method
from .orthopoly import BasisSpec, Family, clenshaw, hermite_norms_squared


@dataclass(frozen=True)
class BsParams:
    sigma: float
    r: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if not np.isfinite(self.r):
            raise DomainError("r must be finite")


@dataclass(frozen=True)
class BsGalerkinSystem:
    """Transposed stiffness matrix (upper triangular, two superdiagonals) and c0."""

    matrix_transposed: BandedMatrix
    params: BsParams
    M: int
    c0: Optional[np.ndarray] = None

    def with_initial(self, c0) -> "BsGalerkinSystem":
        c0 = np.asarray(c0, dtype=float)
        if c0.shape != (self.M + 1,):
            raise DomainError(f"c0 must have length {self.M + 1}")
        return replace(self, c0=c0)


def assemble_bs(params: BsParams, M: int) -> BsGalerkinSystem:
    """B^T with diagonal r, offset 1 (j+1)(sigma^2-2r), offset 2 -2(j+2)(j+1)sigma^2."""
    if int(M) != M or M < 0:
        raise DomainError(f"M must be a nonnegative integer, got {M!r}")
    M = int(M)
    s2, r = params.sigma ** 2, params.r
    band = BandedMatrix(M + 1, 0, 2)
    j = np.arange(M + 1, dtype=float)
    band.set_diagonal(0, np.full(M + 1, r))
    band.set_diagonal(1, (j[:-1] + 1) * (s2 - 2 * r))
    band.set_diagonal(2, -2 * (j[:-2] + 2) * s2 * (j[:-2] + 1))
    return BsGalerkinSystem(band, params, M)


def orthonormal_scale(M: int) -> np.ndarray:
    """sqrt(2^k k! sqrt(pi)), mapping Hermite coefficients to orthonormal ones."""
    return np.sqrt(hermite_norms_squared(M))


def evolve_path(system: BsGalerkinSystem, tau: float, method=Method.ADAPTIVE_RK,
                rtol: float = 1e-10, atol: float = 1e-12) -> LinearEvolution:
    if system.c0 is None:
        raise DomainError("system has no initial coefficients")
    return LinearEvolution(system.matrix_transposed, system.c0, tau, method,
                           scale=orthonormal_scale(system.M), rtol=rtol, atol=atol)


def evolve(system: BsGalerkinSystem, tau: float, method=Method.ADAPTIVE_RK,
           rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """c(tau) solving dc/dtau + B^T c = 0 from c(0) = system.c0."""
    return evolve_path(system, tau, method, rtol, atol).final


def eval_bs_solution(coefficients, x):
    """u_M(x) = sum_k c_k H_k(x)."""
    c = np.asarray(coefficients, dtype=float)
    return clenshaw(BasisSpec(Family.HERMITE, max(c.shape[0] - 1, 0)), c, x)
