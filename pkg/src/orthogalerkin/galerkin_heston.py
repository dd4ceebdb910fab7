"""Hermite x Laguerre Galerkin discretization of the Heston equation.

Unknowns are c_{i,j}, the coefficient of H_i(x) L_j(v), stored at flat index
a = i(N+1) + j.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._errors import DomainError
from .numerics import BandedMatrix, LinearEvolution, Method
from .orthopoly import BasisSpec, Family, clenshaw, hermite_norms_squared


@dataclass(frozen=True)
class HestonParams:
    kappa: float
    theta: float
    sigma_tilde: float
    rho: float
    r: float
    lam: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "theta", "sigma_tilde"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value!r}")
        if not -1.0 <= self.rho <= 1.0:
            raise DomainError(f"rho must lie in [-1, 1], got {self.rho!r}")
        if not np.isfinite(self.r):
            raise DomainError("r must be finite")
        if self.lam != 0:
            raise DomainError("only lambda = 0 (risk-neutral variance drift) is supported")

    @property
    def feller_margin(self) -> float:
        """2 kappa theta - sigma_tilde^2; negative means the variance can reach zero."""
        return 2.0 * self.kappa * self.theta - self.sigma_tilde ** 2


@dataclass(frozen=True)
class HestonGalerkinSystem:
    matrix_transposed: BandedMatrix
    params: HestonParams
    M: int
    N: int
    c0: Optional[np.ndarray] = None

    @property
    def dimension(self) -> int:
        return (self.M + 1) * (self.N + 1)

    def with_initial(self, c0) -> "HestonGalerkinSystem":
        c0 = np.asarray(c0, dtype=float)
        if c0.shape != (self.dimension,):
            raise DomainError(f"c0 must have length {self.dimension}")
        return replace(self, c0=c0)


def _check_orders(M, N):
    for name, value in (("M", M), ("N", N)):
        if int(value) != value or value < 0:
            raise DomainError(f"{name} must be a nonnegative integer, got {value!r}")
    return int(M), int(N)


def term_tensors(params: HestonParams, M: int, N: int) -> dict:
    """The seven normalized bilinear terms as arrays T[i, j, k, l].

    T_r[i, j, k, l] = B_r(P_ij, P_kl) / (2^k k! sqrt(pi)). Term 5 is also
    returned split into its three displayed lines as keys "5a", "5b", "5c".
    """
    M, N = _check_orders(M, N)
    i, j, k, l = np.ix_(*(np.arange(n, dtype=float) for n in (M + 1, N + 1, M + 1, N + 1)))

    def delta(a, b):
        return (a == b).astype(float)

    rho, sg, r = params.rho, params.sigma_tilde, params.r
    kappa, theta = params.kappa, params.theta
    v_moment = (2 * j + 1) * delta(j, l) - j * delta(j - 1, l) - (j + 1) * delta(j + 1, l)
    v_deriv = j * (delta(j, l) - delta(j - 1, l))
    cumulative = -(l < j).astype(float)

    t = {}
    t[1] = i * delta(i, k) * v_moment
    t[2] = 0.5 * rho * sg * delta(i + 1, k) * v_deriv
    t[3] = i * rho * sg * delta(i, k + 1) * l * (delta(j, l) - delta(j, l - 1))
    t[4] = 0.5 * sg ** 2 * j * delta(i, k) * delta(j, l)
    t["5a"] = 2 * i * (0.5 * rho * sg - r) * delta(i, k + 1) * delta(j, l)
    t["5b"] = (-2 * i * (k + 1) * delta(i, k + 2) - i * delta(i, k)) * v_moment
    t["5c"] = i * (1 - rho * sg) * delta(i, k + 1) * v_moment
    t[5] = t["5a"] + t["5b"] + t["5c"]
    t[6] = ((0.5 * sg ** 2 - kappa * theta) * delta(i, k) * cumulative
            + (-rho * sg * (0.5 * delta(i + 1, k) + i * delta(i - 1, k))
               + (kappa - 0.5 * sg ** 2) * delta(i, k)) * v_deriv)
    t[7] = r * delta(i, k) * delta(j, l)
    shape = (M + 1, N + 1, M + 1, N + 1)
    return {key: np.broadcast_to(val, shape) for key, val in t.items()}


def tensor_to_transposed(tensor) -> np.ndarray:
    """Dense matrix with entry [k(N+1)+l, i(N+1)+j] = tensor[i, j, k, l]."""
    m1, n1 = tensor.shape[:2]
    return np.ascontiguousarray(np.reshape(tensor, (m1 * n1, m1 * n1)).T)


def term_matrices(params: HestonParams, M: int, N: int) -> dict:
    """Transposed dense matrix of each term, keyed as in :func:`term_tensors`."""
    return {key: tensor_to_transposed(val) for key, val in term_tensors(params, M, N).items()}


def upper_bandwidth(N: int) -> int:
    return 2 * N + 3 if N > 0 else 2


def assemble_heston(params: HestonParams, M: int, N: int) -> HestonGalerkinSystem:
    """Transposed Galerkin matrix; upper triangular with 2N+3 superdiagonals (2 if N = 0)."""
    M, N = _check_orders(M, N)
    t = term_tensors(params, M, N)
    # B_1 cancels the -i delta_{ik} part of B_5 and B_2 the delta_{i+1,k} part
    # of B_6 exactly; adding in this order keeps those zeros exact.
    total = t[1] + t[5]
    total = total + (t[2] + t[6])
    total = total + t[3] + t[4] + t[7]
    dense = tensor_to_transposed(total)
    band = BandedMatrix.from_dense(dense, 0, upper_bandwidth(N))
    return HestonGalerkinSystem(band, params, M, N)


def orthonormal_scale(M: int, N: int) -> np.ndarray:
    """Norm of P_{i,j} at flat index i(N+1)+j."""
    return np.repeat(np.sqrt(hermite_norms_squared(M)), N + 1)


def evolve_heston_path(system: HestonGalerkinSystem, tau: float, method=Method.ADAPTIVE_RK,
                       rtol: float = 1e-10, atol: float = 1e-12) -> LinearEvolution:
    if system.c0 is None:
        raise DomainError("system has no initial coefficients")
    return LinearEvolution(system.matrix_transposed, system.c0, tau, method,
                           scale=orthonormal_scale(system.M, system.N), rtol=rtol, atol=atol)


def evolve_heston(system: HestonGalerkinSystem, tau: float, method=Method.ADAPTIVE_RK,
                  rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """c(tau) solving dc/dtau + B^T c = 0 from c(0) = system.c0."""
    return evolve_heston_path(system, tau, method, rtol, atol).final


def eval_heston_solution(coefficients, M: int, N: int, x, v):
    """u_{M,N}(x, v): Hermite Clenshaw sums per Laguerre degree, then a Laguerre Clenshaw sum."""
    M, N = _check_orders(M, N)
    c = np.asarray(coefficients, dtype=float)
    if c.shape != ((M + 1) * (N + 1),):
        raise DomainError(f"expected {(M + 1) * (N + 1)} coefficients, got shape {c.shape}")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    grid = c.reshape(M + 1, N + 1)
    inner = clenshaw(BasisSpec(Family.HERMITE, M), grid, x[..., None])
    inner = np.moveaxis(np.asarray(inner, dtype=float), -1, 0)
    return clenshaw(BasisSpec(Family.LAGUERRE, N), inner, v)
