"""Reference prices: Black-Scholes closed form and the Heston-Lewis integral."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from ._errors import DomainError, NumericError, TruncationWarning
from .galerkin_bs import BsParams
from .galerkin_heston import HestonParams


@dataclass(frozen=True)
class OptionSpec:
    strike: float
    maturity: float

    def __post_init__(self):
        if not (np.isfinite(self.strike) and self.strike > 0):
            raise DomainError(f"strike must be positive, got {self.strike!r}")
        if not (np.isfinite(self.maturity) and self.maturity > 0):
            raise DomainError(f"maturity must be positive, got {self.maturity!r}")


@dataclass(frozen=True)
class LewisIntegrationSettings:
    """Contour truncation u <= truncation and adaptive quadrature controls.

    A target is converged when its error estimate is below
    max(tolerance, relative_tolerance * |integral|).
    """

    truncation: float = 200.0
    tolerance: float = 1e-10
    max_subdivisions: int = 5000
    relative_tolerance: float = 1e-13
    initial_panels: int = 16

    def __post_init__(self):
        if not self.truncation >= 50:
            raise DomainError("truncation must be at least 50")
        if not self.tolerance > 0 or not self.relative_tolerance >= 0:
            raise DomainError("tolerances must be positive")
        if self.max_subdivisions < 1 or self.initial_panels < 1:
            raise DomainError("max_subdivisions and initial_panels must be positive")


def normal_cdf(z):
    """Standard normal distribution function, 0.5 erfc(-z / sqrt 2)."""
    out = 0.5 * erfc(-np.asarray(z, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def bs_price(params: BsParams, option: OptionSpec, x, tau):
    """European call under Black-Scholes at log-price x, time to maturity tau.

    tau = 0 gives the payoff.
    """
    x = np.asarray(x, dtype=float)
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    K = option.strike
    if tau == 0:
        out = np.maximum(np.exp(x) - K, 0.0)
    else:
        sd = params.sigma * math.sqrt(tau)
        d1 = (x - math.log(K) + (params.r + 0.5 * params.sigma ** 2) * tau) / sd
        out = np.exp(x) * normal_cdf(d1) - K * math.exp(-params.r * tau) * normal_cdf(d1 - sd)
    return float(out) if out.ndim == 0 else out


# Gauss-Kronrod 7-15 on [-1, 1]: Kronrod abscissae (descending, last is 0),
# Kronrod weights, and Gauss weights for the odd-indexed abscissae.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GK_GAUSS_WEIGHTS = np.zeros(15)
GK_GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GK_GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]
GK_GAUSS_WEIGHTS[7] = _WG[3]


@dataclass
class QuadratureResult:
    integral: np.ndarray
    error: np.ndarray
    panels: int


def adaptive_gk(panel_fn, a: float, b: float, tolerance: float, relative_tolerance: float = 0.0,
                max_subdivisions: int = 5000, initial_panels: int = 16) -> QuadratureResult:
    """Adaptive G7-K15 on [a, b] for many integrands sharing one mesh.

    ``panel_fn(nodes, kronrod_w, gauss_w)`` receives panel nodes of shape
    (P, 15) and matching weight arrays and returns the Kronrod and Gauss
    integrals per panel, each of shape (P, *targets). A panel is accepted
    once its Kronrod-Gauss difference is within its share, proportional to
    width, of every target's allowance.
    """
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    total = err_total = None
    subdivisions = 0
    length = b - a
    while True:
        half = 0.5 * (hi - lo)
        nodes = (0.5 * (hi + lo))[:, None] + half[:, None] * GK_NODES
        kw = half[:, None] * GK_KRONROD_WEIGHTS
        gw = half[:, None] * GK_GAUSS_WEIGHTS
        ik, ig = panel_fn(nodes, kw, gw)
        err = np.abs(ik - ig)
        if not (np.all(np.isfinite(ik)) and np.all(np.isfinite(err))):
            raise NumericError("non-finite values in adaptive quadrature")
        if total is None:
            total = np.zeros(ik.shape[1:])
            err_total = np.zeros(ik.shape[1:])
        estimate = total + ik.sum(axis=0)
        allowance = np.maximum(tolerance, relative_tolerance * np.abs(estimate))
        if np.all(err_total + err.sum(axis=0) <= allowance):
            return QuadratureResult(estimate, err_total + err.sum(axis=0), subdivisions + lo.size)
        share = (2.0 * half / length).reshape((-1,) + (1,) * (err.ndim - 1))
        ok = np.all(err <= share * allowance, axis=tuple(range(1, err.ndim)))
        total = total + ik[ok].sum(axis=0)
        err_total = err_total + err[ok].sum(axis=0)
        lo, hi = lo[~ok], hi[~ok]
        subdivisions += int(np.count_nonzero(~ok))
        if subdivisions > max_subdivisions or lo.size == 0:
            achieved = float(np.max(err_total + (err[~ok].sum(axis=0) if lo.size else 0.0)))
            raise NumericError(
                f"adaptive quadrature did not converge after {subdivisions} subdivisions "
                f"(achieved error {achieved:.3e}, requested {tolerance:.3e})"
            )
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])


def _transform_parts(params: HestonParams, tau: float, u):
    """u-only pieces of the Lewis integrand at k = u + i/2.

    Returns (k, log of the v-independent factor of H-hat, coefficient of v
    in the exponent, imaginary parts of the two logs for branch checks).
    """
    kappa, theta, sg, rho = params.kappa, params.theta, params.sigma_tilde, params.rho
    k = u + 0.5j
    b = 2.0 / sg ** 2 * (1j * k * rho * sg + kappa)
    xi = np.sqrt(b * b + 4.0 * (k * k - 1j * k) / sg ** 2)
    g = 0.5 * (b - xi)
    h = (b - xi) / (b + xi)
    q = 0.5 * sg ** 2 * tau
    e = np.exp(-xi * q)
    log_num = np.log(1.0 - h * e)
    log_den = np.log(1.0 - h)
    a_part = 2.0 * kappa * theta / sg ** 2 * (q * g - (log_num - log_den))
    v_part = g * (1.0 - e) / (1.0 - h * e)
    return k, a_part, v_part, (log_num.imag, log_den.imag)


def _check_branches(u, imag_parts):
    order = np.argsort(u, axis=None)
    for part in imag_parts:
        seq = np.ravel(part)[order]
        if seq.size > 1 and np.max(np.abs(np.diff(seq))) > math.pi:
            raise NumericError("complex logarithm jumps across its branch cut in the Lewis integrand")


@dataclass
class LewisResult:
    price: np.ndarray
    integral_error: np.ndarray
    tail_estimate: np.ndarray
    truncated: bool
    panels: int


def _tail(params, tau, X, v, U):
    """Envelope of the integrand at U times its local decay length."""
    u = np.array([U - 1.0, U])
    k, a_part, v_part, _ = _transform_parts(params, tau, u)
    denom = np.abs(k * k - 1j * k)
    log_env = (0.5 * X[..., None] + a_part.real + v[..., None] * v_part.real) - np.log(denom)
    drop = log_env[..., 0] - log_env[..., 1]
    length = np.where(drop > 0, 1.0 / np.maximum(drop, 1e-300), U)
    return np.exp(log_env[..., 1]) * np.minimum(length, U)


def _finish(params, option, x, v, tau, X, integral, error, panels, settings):
    price = np.exp(x) - option.strike * math.exp(-params.r * tau) / math.pi * integral
    tail = _tail(params, tau, X, v, settings.truncation)
    allowance = np.maximum(settings.tolerance, settings.relative_tolerance * np.abs(integral))
    truncated = bool(np.any(tail > allowance))
    if truncated:
        warnings.warn(
            f"Lewis integrand tail beyond u = {settings.truncation} exceeds the tolerance "
            f"(max tail estimate {float(np.max(tail)):.3e})",
            TruncationWarning,
            stacklevel=3,
        )
    return LewisResult(price, error, tail, truncated, panels)


def _prepare(params, option, v, tau):
    if params.lam != 0:
        raise DomainError("only lambda = 0 is supported")
    if not tau > 0:
        raise DomainError("tau must be positive")
    if np.any(np.asarray(v) < 0):
        raise DomainError("variance must be nonnegative")


def heston_lewis(params: HestonParams, option: OptionSpec, x, v, tau: float,
                 settings: LewisIntegrationSettings = LewisIntegrationSettings()) -> LewisResult:
    """Heston call price by the Lewis contour integral, with diagnostics.

    ``x`` and ``v`` broadcast against each other.
    """
    _prepare(params, option, v, tau)
    x, v = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
    shape = x.shape
    xf, vf = x.ravel(), v.ravel()
    X = xf - math.log(option.strike) + params.r * tau

    def panel_fn(nodes, kw, gw):
        k, a_part, v_part, imag = _transform_parts(params, tau, nodes)
        _check_branches(nodes, imag)
        base = np.exp(a_part) / (k * k - 1j * k)
        # (P, 15, T)
        vals = (np.exp(vf * v_part[..., None] + X * (0.5 - 1j * nodes[..., None])) * base[..., None]).real
        return np.einsum("pn,pnt->pt", kw, vals), np.einsum("pn,pnt->pt", gw, vals)

    q = adaptive_gk(panel_fn, 0.0, settings.truncation, settings.tolerance,
                    settings.relative_tolerance, settings.max_subdivisions, settings.initial_panels)
    res = _finish(params, option, xf, vf, tau, X, q.integral, q.error, q.panels, settings)
    res.price = res.price.reshape(shape)
    res.integral_error = res.integral_error.reshape(shape)
    res.tail_estimate = res.tail_estimate.reshape(shape)
    return res


def heston_lewis_price(params: HestonParams, option: OptionSpec, x, v, tau: float,
                       settings: LewisIntegrationSettings = LewisIntegrationSettings()):
    """Heston call price u(x, v, tau); float for scalar input, array otherwise."""
    price = heston_lewis(params, option, x, v, tau, settings).price
    return float(price) if price.ndim == 0 else price


def heston_lewis_grid(params: HestonParams, option: OptionSpec, x, v, tau: float,
                      settings: LewisIntegrationSettings = LewisIntegrationSettings()) -> LewisResult:
    """Prices on the tensor grid x[:, None], v[None, :].

    The integrand factors into an x part and a v part per node, so each panel
    is a matrix product.
    """
    _prepare(params, option, v, tau)
    x = np.asarray(x, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    X = x - math.log(option.strike) + params.r * tau

    def panel_fn(nodes, kw, gw):
        k, a_part, v_part, imag = _transform_parts(params, tau, nodes)
        _check_branches(nodes, imag)
        base = np.exp(a_part) / (k * k - 1j * k)
        ik = np.empty((nodes.shape[0], x.size, v.size))
        ig = np.empty_like(ik)
        for p in range(nodes.shape[0]):
            ex = np.exp(X[:, None] * (0.5 - 1j * nodes[p]))
            ev = np.exp(v[None, :] * v_part[p][:, None])
            ik[p] = ((ex * (base[p] * kw[p])) @ ev).real
            ig[p] = ((ex * (base[p] * gw[p])) @ ev).real
        return ik, ig

    q = adaptive_gk(panel_fn, 0.0, settings.truncation, settings.tolerance,
                    settings.relative_tolerance, settings.max_subdivisions, settings.initial_panels)
    xx, vv = np.meshgrid(x, v, indexing="ij")
    XX = xx - math.log(option.strike) + params.r * tau
    return _finish(params, option, xx, vv, tau, XX, q.integral, q.error, q.panels, settings)
