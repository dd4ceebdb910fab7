import json
import math
import pathlib
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import bs_call, heston_call_little_trap
from orthogalerkin import DomainError, NumericError, TruncationWarning
from orthogalerkin.experiments import HESTON_TABLE_PARAMS, HESTON_V0
from orthogalerkin.galerkin_bs import BsParams
from orthogalerkin.galerkin_heston import HestonParams
from orthogalerkin.reference import (GK_GAUSS_WEIGHTS, GK_KRONROD_WEIGHTS, GK_NODES,
                                     LewisIntegrationSettings, OptionSpec, adaptive_gk, bs_price,
                                     heston_lewis, heston_lewis_grid, heston_lewis_price,
                                     normal_cdf)

DATA = pathlib.Path(__file__).parent / "data"
OPTION = OptionSpec(100.0, 1.0)


def test_normal_cdf_values():
    assert normal_cdf(0.0) == 0.5
    assert 1 - 1e-15 < normal_cdf(10.0) <= 1.0
    # mpmath ncdf(1) at 30 digits
    assert normal_cdf(1.0) == pytest.approx(0.841344746068542948585232545632, abs=1e-15)
    assert normal_cdf(-37.0) == pytest.approx(5.7255712225239e-300, rel=1e-10)


def test_option_spec_validation():
    with pytest.raises(DomainError):
        OptionSpec(0.0, 1.0)
    with pytest.raises(DomainError):
        OptionSpec(100.0, -1.0)


def test_bs_price_example():
    price = bs_price(BsParams(0.03, 0.1), OPTION, math.log(100), 1.0)
    assert price == pytest.approx(9.5165, abs=5e-4)


@given(st.floats(0.01, 1.0), st.floats(-0.05, 0.2), st.floats(0.05, 3.0), st.floats(-1.0, 1.0))
def test_bs_price_matches_mpmath(sigma, r, tau, log_moneyness):
    S = 100.0 * math.exp(log_moneyness)
    ref = bs_call(S, 100.0, sigma, r, tau)
    got = bs_price(BsParams(sigma, r), OptionSpec(100.0, tau), math.log(S), tau)
    # relative where the price is not vanishingly small
    assert got == pytest.approx(ref, rel=1e-12, abs=1e-12 * S)


def test_bs_price_limits():
    p = BsParams(0.2, 0.05)
    assert bs_price(p, OptionSpec(1e-12, 1.0), math.log(50), 1.0) == pytest.approx(50.0, rel=1e-12)
    for x in (math.log(100) - 0.5, math.log(100) + 0.5):
        payoff = max(math.exp(x) - 100, 0.0)
        assert bs_price(p, OPTION, x, 1e-12) == pytest.approx(payoff, abs=1e-8)
        assert bs_price(p, OPTION, x, 0.0) == payoff


def test_bs_price_monotone():
    p = BsParams(0.25, 0.04)
    x = np.linspace(2.0, 7.0, 1000)
    assert np.all(np.diff(bs_price(p, OPTION, x, 1.0)) >= 0)
    taus = np.linspace(0.01, 5, 200)
    prices = [bs_price(p, OPTION, math.log(90), t) for t in taus]
    assert np.all(np.diff(prices) >= 0)


def test_gk_rule_exactness():
    assert GK_KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert GK_GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    for deg in range(0, 23):
        exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
        assert GK_KRONROD_WEIGHTS @ GK_NODES ** deg == pytest.approx(exact, abs=1e-14)
        if deg <= 13:
            assert GK_GAUSS_WEIGHTS @ GK_NODES ** deg == pytest.approx(exact, abs=1e-14)


def test_adaptive_gk_oscillatory():
    def panel(nodes, kw, gw):
        f = np.cos(50 * nodes) * np.exp(-nodes)
        return (kw * f).sum(axis=1), (gw * f).sum(axis=1)
    q = adaptive_gk(panel, 0.0, 10.0, 1e-12)
    exact = (1 - np.exp(-10) * (np.cos(500) - 50 * np.sin(500))) / (1 + 2500)
    assert float(q.integral) == pytest.approx(exact, abs=1e-12)


def test_adaptive_gk_reports_failure():
    def panel(nodes, kw, gw):
        f = 1 / np.sqrt(np.abs(nodes - 0.3))
        return (kw * f).sum(axis=1), (gw * f).sum(axis=1)
    with pytest.raises(NumericError, match="achieved error"):
        adaptive_gk(panel, 0.0, 1.0, 1e-14, max_subdivisions=50)


@pytest.mark.parametrize("gamma,v", [(1.0, 0.05), (0.7, 0.05), (1.3, 0.05), (1.0, 0.2), (0.85, 0.01)])
def test_lewis_matches_independent_formulation(gamma, v):
    p = HESTON_TABLE_PARAMS
    ref = heston_call_little_trap(100 * gamma, 100, v, 1.0, p.r, p.kappa, p.theta, p.sigma_tilde, p.rho)
    got = heston_lewis_price(p, OPTION, math.log(100 * gamma), v, 1.0)
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_lewis_degenerates_to_bs():
    p = HestonParams(5.0, 0.0009, 1e-4, -0.8, 0.1)
    got = heston_lewis_price(p, OPTION, math.log(100), 0.0009, 1.0)
    ref = bs_price(BsParams(0.03, 0.1), OPTION, math.log(100), 1.0)
    assert got == pytest.approx(ref, rel=1e-4)


def test_lewis_against_monte_carlo():
    golden = json.loads((DATA / "heston_mc_golden.json").read_text())
    p = golden["params"]
    assert (p["kappa"], p["theta"], p["sigma_tilde"], p["rho"], p["r"]) == (5.0, 0.05, 0.5, -0.8, 0.03)
    price = heston_lewis_price(HESTON_TABLE_PARAMS, OPTION, p["x"], p["v"], p["maturity"])
    assert abs(price - golden["price"]) <= 3 * golden["standard_error"]


def test_lewis_golden_value():
    # frozen after agreement with Monte Carlo and the independent formulation
    price = heston_lewis_price(HESTON_TABLE_PARAMS, OPTION, math.log(100), HESTON_V0, 1.0)
    assert price == pytest.approx(10.14803478826, rel=1e-10)


def test_no_arbitrage_bounds():
    x = np.log(np.linspace(40, 500, 60))
    for v in (0.0, 0.01, 0.05, 0.3, 1.0):
        u = heston_lewis_price(HESTON_TABLE_PARAMS, OPTION, x, v, 1.0)
        lower = np.maximum(np.exp(x) - 100 * math.exp(-0.03), 0)
        assert np.all(u >= lower - 1e-8)
        assert np.all(u <= np.exp(x) + 1e-8)


def test_deep_itm():
    # the price sits just above the discounted intrinsic value; the gap is
    # the time value of the deep out-of-the-money put, not rounding
    p = HESTON_TABLE_PARAMS
    u = heston_lewis_price(p, OPTION, math.log(500), 0.05, 1.0)
    ref = heston_call_little_trap(500, 100, 0.05, 1.0, p.r, p.kappa, p.theta, p.sigma_tilde, p.rho)
    assert 500 - 100 * math.exp(-0.03) <= u <= 500
    assert u == pytest.approx(ref, abs=1e-8)


def test_tail_below_tolerance():
    settings = LewisIntegrationSettings()
    res = heston_lewis(HESTON_TABLE_PARAMS, OPTION, np.log([70.0, 100.0, 130.0]), 0.05, 1.0, settings)
    assert not res.truncated
    assert np.all(res.tail_estimate < settings.tolerance / settings.truncation)


def test_truncation_warning():
    # tiny vol-of-vol and tiny variance: the integrand decays slowly in u
    p = HestonParams(0.1, 1e-4, 0.01, 0.0, 0.0)
    with pytest.warns(TruncationWarning):
        res = heston_lewis(p, OPTION, math.log(100), 1e-4, 0.01, LewisIntegrationSettings(truncation=50))
    assert res.truncated


def test_halving_tolerance_is_consistent():
    x = np.log(np.array([0.7, 1.0, 1.3]) * 100)
    base = LewisIntegrationSettings(tolerance=1e-8, relative_tolerance=0.0)
    tight = LewisIntegrationSettings(tolerance=5e-9, relative_tolerance=0.0)
    a = heston_lewis_price(HESTON_TABLE_PARAMS, OPTION, x, 0.05, 1.0, base)
    b = heston_lewis_price(HESTON_TABLE_PARAMS, OPTION, x, 0.05, 1.0, tight)
    scale = 100 * math.exp(-0.03) / math.pi
    assert np.all(np.abs(a - b) < scale * base.tolerance)


def test_grid_matches_pointwise():
    x = np.log(np.array([60.0, 100.0, 150.0]))
    v = np.array([0.0, 0.05, 0.7])
    grid = heston_lewis_grid(HESTON_TABLE_PARAMS, OPTION, x, v, 1.0).price
    xx, vv = np.meshgrid(x, v, indexing="ij")
    point = heston_lewis_price(HESTON_TABLE_PARAMS, OPTION, xx, vv, 1.0)
    np.testing.assert_allclose(grid, point, rtol=1e-11, atol=1e-10)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        heston_lewis_price(HESTON_TABLE_PARAMS, OPTION, 4.6, -0.1, 1.0)
    with pytest.raises(DomainError):
        heston_lewis_price(HESTON_TABLE_PARAMS, OPTION, 4.6, 0.1, 0.0)
    with pytest.raises(DomainError):
        LewisIntegrationSettings(truncation=10)


def test_no_warnings_on_table_grid():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        heston_lewis_price(HESTON_TABLE_PARAMS, OPTION, np.log(np.linspace(70, 150, 20)), 0.05, 1.0)
