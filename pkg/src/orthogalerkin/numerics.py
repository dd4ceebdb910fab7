"""Linear-algebra and ODE kernels shared by the Galerkin solvers.

* :class:`BandedMatrix` -- diagonal-compressed storage with an O(D * bandwidth)
  matrix-vector product.
* :func:`matrix_exponential` -- scaling and squaring with diagonal Pade
  approximants of order 3, 5, 7, 9 or 13 (Higham's 2005 thresholds).
* :func:`integrate_linear` -- Dormand-Prince 5(4) with PI step control and the
  pair's quartic continuous extension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import solve, solve_triangular

from ._errors import DomainError, NumericError


class BandedMatrix:
    """Square matrix stored by diagonals.

    ``storage[upper + i - j, j] == A[i, j]`` for ``-lower <= j - i <= upper``
    (the LAPACK ``ab`` layout).
    """

    def __init__(self, dimension: int, lower_bandwidth: int, upper_bandwidth: int, storage=None):
        if dimension < 1:
            raise DomainError("dimension must be at least 1")
        if lower_bandwidth < 0 or upper_bandwidth < 0:
            raise DomainError("bandwidths must be nonnegative")
        self.dimension = int(dimension)
        self.lower_bandwidth = int(lower_bandwidth)
        self.upper_bandwidth = int(upper_bandwidth)
        shape = (self.lower_bandwidth + self.upper_bandwidth + 1, self.dimension)
        if storage is None:
            storage = np.zeros(shape)
        storage = np.asarray(storage, dtype=float)
        if storage.shape != shape:
            raise DomainError(f"storage shape {storage.shape} != {shape}")
        self.storage = storage

    @property
    def shape(self):
        return (self.dimension, self.dimension)

    def diagonal(self, offset: int = 0) -> np.ndarray:
        """View of the diagonal A[i, i + offset]."""
        if not -self.lower_bandwidth <= offset <= self.upper_bandwidth:
            return np.zeros(max(self.dimension - abs(offset), 0))
        row = self.upper_bandwidth - offset
        if abs(offset) >= self.dimension:
            return self.storage[row, :0]
        if offset >= 0:
            return self.storage[row, offset:]
        return self.storage[row, : self.dimension + offset]

    def set_diagonal(self, offset: int, values) -> None:
        self.diagonal(offset)[...] = values

    @classmethod
    def from_dense(cls, a, lower_bandwidth: int, upper_bandwidth: int) -> "BandedMatrix":
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n):
            raise DomainError("matrix must be square")
        outside = np.triu(a, upper_bandwidth + 1) + np.tril(a, -lower_bandwidth - 1)
        if np.any(outside != 0):
            raise DomainError("matrix has nonzero entries outside the requested band")
        out = cls(n, lower_bandwidth, upper_bandwidth)
        for k in range(-lower_bandwidth, upper_bandwidth + 1):
            out.set_diagonal(k, np.diagonal(a, k))
        return out

    def to_dense(self) -> np.ndarray:
        a = np.zeros(self.shape)
        for k in range(-self.lower_bandwidth, self.upper_bandwidth + 1):
            if abs(k) < self.dimension:
                idx = np.arange(self.dimension - abs(k))
                if k >= 0:
                    a[idx, idx + k] = self.diagonal(k)
                else:
                    a[idx - k, idx] = self.diagonal(k)
        return a

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.dimension:
            raise DomainError("dimension mismatch in banded product")
        y = np.zeros_like(x, dtype=float)
        n = self.dimension
        for k in range(-self.lower_bandwidth, self.upper_bandwidth + 1):
            if abs(k) >= n:
                continue
            d = self.diagonal(k)
            if x.ndim > 1:
                d = d[:, None]
            if k >= 0:
                y[: n - k] += d * x[k:]
            else:
                y[-k:] += d * x[: n + k]
        return y

    def __matmul__(self, x):
        return self.matvec(x)

    def scaled(self, row_scale, col_scale) -> "BandedMatrix":
        """diag(row_scale) @ A @ diag(col_scale), staying banded."""
        row_scale = np.asarray(row_scale, dtype=float)
        col_scale = np.asarray(col_scale, dtype=float)
        out = BandedMatrix(self.dimension, self.lower_bandwidth, self.upper_bandwidth)
        n = self.dimension
        for k in range(-self.lower_bandwidth, self.upper_bandwidth + 1):
            if abs(k) >= n:
                continue
            if k >= 0:
                rows = np.arange(n - k)
            else:
                rows = np.arange(-k, n)
            out.set_diagonal(k, self.diagonal(k) * row_scale[rows] * col_scale[rows + k])
        return out


def _as_dense(a) -> np.ndarray:
    if isinstance(a, BandedMatrix):
        return a.to_dense()
    return np.asarray(a, dtype=float)


# Pade numerator coefficients b_0..b_m; thresholds theta_m on ||A||_1.
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_low(a, m):
    b = _PADE[m]
    ident = np.eye(a.shape[0])
    a2 = a @ a
    powers = [ident, a2]
    for _ in range(2, m // 2 + 1):
        powers.append(powers[-1] @ a2)
    u = sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
    v = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
    return a @ u, v


def _pade13(a):
    b = _PADE[13]
    ident = np.eye(a.shape[0])
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    return u, v


def matrix_exponential(a, scale: float = 1.0) -> np.ndarray:
    """exp(scale * a) by scaling and squaring with a Pade approximant."""
    a = _as_dense(a) * float(scale)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError("matrix_exponential needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    n = a.shape[0]
    if n == 0:
        return a.copy()
    upper = not np.any(np.tril(a, -1))
    norm1 = np.abs(a).sum(axis=0).max()
    squarings = 0
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            u, v = _pade_low(a, m)
            break
    else:
        if norm1 > _THETA[13]:
            squarings = max(0, math.ceil(math.log2(norm1 / _THETA[13])))
        a = a / 2.0 ** squarings
        u, v = _pade13(a)
    if upper:
        r = solve_triangular(v - u, v + u)
    else:
        r = solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    if not np.all(np.isfinite(r)):
        raise NumericError("matrix exponential overflowed")
    return r


# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
_D = np.array([-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
               -10690763975 / 1880347072, 701980252875 / 199316789632,
               -1453857185 / 822651844, 69997945 / 29380423])

_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_FAC_MIN, _FAC_MAX = 0.2, 10.0
MAX_STEPS = 10**6


@dataclass
class DenseOutput:
    """Piecewise quartic interpolant over the accepted steps."""

    times: np.ndarray
    states: np.ndarray
    coeffs: np.ndarray = field(repr=False)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        ts = np.atleast_1d(t_arr)
        t0, t1 = self.times[0], self.times[-1]
        lo, hi = min(t0, t1), max(t0, t1)
        if np.any((ts < lo) | (ts > hi)):
            raise DomainError(f"dense output queried outside [{lo}, {hi}]")
        out = np.empty((ts.size, self.states.shape[1]))
        for n, tq in enumerate(ts):
            hit = np.flatnonzero(self.times == tq)
            if hit.size:
                out[n] = self.states[hit[0]]
                continue
            k = min(max(np.searchsorted(self.times, tq) - 1, 0), len(self.times) - 2)
            h = self.times[k + 1] - self.times[k]
            th = (tq - self.times[k]) / h
            th1 = 1.0 - th
            r1, r2, r3, r4, r5 = self.coeffs[k]
            out[n] = r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))
        return out[0] if scalar else out


@dataclass
class OdeSolution:
    final_state: np.ndarray
    dense_output: DenseOutput
    step_count: int
    rejected_steps: int


def integrate_linear(matrix, c0, tau: float, rtol: float = 1e-10, atol: float = 1e-12) -> OdeSolution:
    """Integrate dc/dtau = -matrix @ c from c(0) = c0 up to tau.

    Each accepted step keeps the estimated local error below
    ``atol + rtol * max(|c_old|, |c_new|)`` componentwise.
    """
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    if rtol <= 0 or atol <= 0:
        raise DomainError("rtol and atol must be positive")
    y = np.array(c0, dtype=float)
    if isinstance(matrix, BandedMatrix):
        rhs = lambda v: -matrix.matvec(v)  # noqa: E731
    else:
        dense = np.asarray(matrix, dtype=float)
        rhs = lambda v: -(dense @ v)  # noqa: E731

    times, states, coeffs = [0.0], [y.copy()], []
    if tau == 0:
        return OdeSolution(y, DenseOutput(np.array(times), np.array(states), np.empty((0, 5) + y.shape)), 0, 0)

    with np.errstate(over="ignore", invalid="ignore"):
        return _dopri(rhs, y, tau, rtol, atol, times, states, coeffs)


def _dopri(rhs, y, tau, rtol, atol, times, states, coeffs):
    # tau near the subnormal range: the fraction would round to zero
    h = tau * min(1e-3, rtol ** 0.2) or tau
    t = 0.0
    k1 = rhs(y)
    fac_old = 1e-4
    steps = rejected = 0
    last_rejected = False
    while t < tau:
        if steps + rejected >= MAX_STEPS:
            raise NumericError(f"more than {MAX_STEPS} steps before reaching tau = {tau} (stopped at {t})")
        if h <= 0 or (t > 0 and h <= 16 * np.finfo(float).eps * t):
            raise NumericError(f"step size underflow at tau = {t}")
        if t + h >= tau or t + 1.01 * h >= tau:
            h = tau - t
        ks = [k1]
        for s in range(1, 7):
            ys = y + h * sum(a * k for a, k in zip(_A[s], ks) if a != 0.0)
            if s == 6:
                y_new = ys
            ks.append(rhs(ys))
        err_vec = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.max(np.abs(err_vec) / sc) if y.size else 0.0
        if not np.isfinite(err):
            raise NumericError(f"non-finite error estimate at tau = {t}")
        fac11 = err ** _EXPO if err > 0 else 0.0
        if err <= 1.0:
            fac = fac11 / fac_old ** _BETA
            fac = min(1.0 / _FAC_MIN, max(1.0 / _FAC_MAX, fac / _SAFETY))
            h_new = h / fac
            ydiff = y_new - y
            bspl = h * ks[0] - ydiff
            coeffs.append((
                y.copy(),
                ydiff,
                bspl,
                ydiff - h * ks[6] - bspl,
                h * sum(d * k for d, k in zip(_D, ks) if d != 0.0),
            ))
            t_new = tau if h == tau - t else t + h
            fac_old = max(err, 1e-4)
            y, t, k1 = y_new, t_new, ks[6]
            times.append(t)
            states.append(y.copy())
            steps += 1
            if last_rejected:
                h_new = min(h_new, h)
            last_rejected = False
            h = h_new
        else:
            h = h / min(1.0 / _FAC_MIN, fac11 / _SAFETY)
            rejected += 1
            last_rejected = True
    dense = DenseOutput(np.array(times), np.array(states), np.array(coeffs))
    return OdeSolution(y, dense, steps, rejected)


class Method(str, Enum):
    MATRIX_EXPONENTIAL = "expm"
    ADAPTIVE_RK = "rk"


class LinearEvolution:
    """Solution path of dc/dtau = -A c, queryable on [0, tau].

    With ``scale`` the system is integrated in the coordinates d = scale * c,
    i.e. with the similar matrix diag(scale) A diag(1/scale). For Galerkin
    systems in an orthogonal basis, scale = basis norms makes d the
    coordinates in the orthonormal basis, which keeps the entries of the
    propagator within floating range.
    """

    def __init__(self, matrix, c0, tau, method=Method.ADAPTIVE_RK, scale=None,
                 rtol: float = 1e-10, atol: float = 1e-12):
        method = Method(method)
        if tau < 0:
            raise DomainError("tau must be nonnegative")
        c0 = np.asarray(c0, dtype=float)
        n = c0.shape[0]
        scale = np.ones(n) if scale is None else np.asarray(scale, dtype=float)
        if scale.shape != (n,) or np.any(scale <= 0):
            raise DomainError("scale must be a positive vector matching c0")
        if isinstance(matrix, BandedMatrix):
            scaled = matrix.scaled(scale, 1.0 / scale)
        else:
            matrix = np.asarray(matrix, dtype=float)
            scaled = scale[:, None] * matrix / scale[None, :]
        self.method = method
        self.tau = float(tau)
        self.c0 = c0
        self._scale = scale
        self._matrix = scaled
        self.step_count = 0
        self.rejected_steps = 0
        d0 = scale * c0
        if method is Method.ADAPTIVE_RK:
            self._solution = integrate_linear(scaled, d0, self.tau, rtol=rtol, atol=atol)
            self.step_count = self._solution.step_count
            self.rejected_steps = self._solution.rejected_steps
            self.final = c0.copy() if self.tau == 0 else self._solution.final_state / scale
        else:
            self._solution = None
            self.final = self._expm_at(self.tau)

    def _expm_at(self, t):
        if t == 0:
            return self.c0.copy()
        return (matrix_exponential(self._matrix, -t) @ (self._scale * self.c0)) / self._scale

    def __call__(self, t):
        """Coefficients at time t (scalar) or times t (array, one row per time)."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.tau):
            raise DomainError(f"time outside [0, {self.tau}]")
        if self._solution is not None:
            out = self._solution.dense_output(t_arr) / self._scale
            out[t_arr == 0] = self.c0  # undo the scaling round-off at the start
            return out
        if t_arr.ndim == 0:
            return self.final.copy() if t_arr == self.tau else self._expm_at(float(t_arr))
        return np.array([self(float(s)) for s in t_arr])
