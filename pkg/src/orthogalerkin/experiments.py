"""Experiment presets and end-to-end runs producing table rows."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .galerkin_bs import BsParams, assemble_bs, eval_bs_solution, evolve_path
from .galerkin_heston import (HestonParams, assemble_heston, eval_heston_solution,
                              evolve_heston_path)
from .metrics import Model, error_report, l2_rules
from .numerics import Method
from .projection import PayoffSpec, ProjectionSettings, project_payoff_bs, project_payoff_heston
from .reference import (LewisIntegrationSettings, OptionSpec, bs_price, heston_lewis_grid,
                        heston_lewis_price)

# The published BS tables correspond to sigma = 0.1, r = 0.03.
BS_TABLE_PARAMS = BsParams(sigma=0.1, r=0.03)
HESTON_TABLE_PARAMS = HestonParams(kappa=5.0, theta=0.05, sigma_tilde=0.5, rho=-0.8, r=0.03)
HESTON_V0 = 0.05
STRIKE = 100.0
MATURITY = 1.0
# Coefficients as in the tables: 251-point Gauss-Hermite on the raw payoff.
TABLE_PROJECTION = ProjectionSettings(coefficient_quadrature_size=251, kink_split=False)

BS_TABLE_ORDERS = (20, 40, 60, 80, 100, 120)
HESTON_TABLE_ORDERS = tuple((M, N) for M in (25, 30, 35) for N in (26, 28, 30))


@dataclass
class BsRun:
    params: BsParams
    option: OptionSpec
    M: int
    coefficients: np.ndarray
    path: object = field(repr=False)

    def price(self, x):
        return eval_bs_solution(self.coefficients, x)

    def reference(self, x):
        return bs_price(self.params, self.option, x, self.option.maturity)


def run_bs(M: int, params: BsParams = BS_TABLE_PARAMS, strike: float = STRIKE,
           maturity: float = MATURITY, method=Method.ADAPTIVE_RK,
           projection: ProjectionSettings = TABLE_PROJECTION) -> BsRun:
    option = OptionSpec(strike, maturity)
    c0 = project_payoff_bs(PayoffSpec(strike), M, projection)
    system = assemble_bs(params, M).with_initial(c0)
    path = evolve_path(system, maturity, method)
    return BsRun(params, option, M, path.final, path)


def bs_report(run: BsRun):
    return error_report(run.price, run.reference, run.option.strike, Model.BS,
                        metadata={"M": run.M})


@dataclass
class HestonRun:
    params: HestonParams
    option: OptionSpec
    M: int
    N: int
    coefficients: np.ndarray
    path: object = field(repr=False)
    lewis: LewisIntegrationSettings = LewisIntegrationSettings()

    def price(self, x, v):
        return eval_heston_solution(self.coefficients, self.M, self.N, x, v)

    def reference(self, x, v):
        return heston_lewis_price(self.params, self.option, x, v, self.option.maturity, self.lewis)


def run_heston(M: int, N: int, params: HestonParams = HESTON_TABLE_PARAMS, strike: float = STRIKE,
               maturity: float = MATURITY, method=Method.ADAPTIVE_RK,
               projection: ProjectionSettings = TABLE_PROJECTION) -> HestonRun:
    option = OptionSpec(strike, maturity)
    c0 = project_payoff_heston(PayoffSpec(strike), M, N, projection)
    system = assemble_heston(params, M, N).with_initial(c0)
    path = evolve_heston_path(system, maturity, method)
    return HestonRun(params, option, M, N, path.final, path)


@lru_cache(maxsize=8)
def heston_l2_reference(params: HestonParams, strike: float, maturity: float) -> np.ndarray:
    """Lewis prices on the 251 x 201 L2 quadrature grid."""
    hermite, laguerre = l2_rules(Model.HESTON)
    res = heston_lewis_grid(params, OptionSpec(strike, maturity), hermite.nodes, laguerre.nodes, maturity)
    res.price.flags.writeable = False
    return res.price


def heston_report(run: HestonRun, v0: float = HESTON_V0):
    hermite, laguerre = l2_rules(Model.HESTON)
    xx, vv = np.meshgrid(hermite.nodes, laguerre.nodes, indexing="ij")
    ref_grid = heston_l2_reference(run.params, run.option.strike, run.option.maturity)
    return error_report(run.price, run.reference, run.option.strike, Model.HESTON, v0=v0,
                        l2_approx=run.price(xx, vv), l2_ref=ref_grid,
                        metadata={"M": run.M, "N": run.N, "v0": v0})


def surface_grid_bs(strike: float = STRIKE):
    """S = 0.01, 0.02, ..., 2K."""
    n = int(round(2 * strike / 0.01))
    return np.arange(1, n + 1) * 0.01


def surface_grid_v(v_max: float = 0.5, step: float = 0.005):
    n = int(round(v_max / step))
    return np.arange(0, n + 1) * step


def log_moneyness_window(strike: float = STRIKE, lo: float = 0.7, hi: float = 1.3, count: int = 61):
    return np.log(np.linspace(lo, hi, count) * strike)


def heston_sup_gap(run: HestonRun, boundary_values, x) -> float:
    """max |u_B - u_{M,N}(x, 0)| over x."""
    return float(np.max(np.abs(np.asarray(boundary_values) - run.price(x, 0.0))))

