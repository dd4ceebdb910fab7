"""Estimator-style wrappers: ``fit`` solves the Galerkin system, ``predict`` prices.

The estimators follow scikit-learn conventions (constructor stores
hyperparameters untouched, learned state ends in ``_``), so they work with
``get_params``/``set_params``/``clone``. There is no training data; ``fit``
accepts and ignores ``X``/``y``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .galerkin_bs import BsParams, assemble_bs, eval_bs_solution, evolve_path
from .galerkin_heston import (HestonParams, assemble_heston, eval_heston_solution,
                              evolve_heston_path)
from .numerics import Method
from .projection import PayoffSpec, ProjectionSettings, project_payoff_bs, project_payoff_heston


class HermiteGalerkinBS(BaseEstimator):
    """Black-Scholes call prices from a degree-M Hermite expansion.

    ``predict`` takes log-prices x of shape (n_samples, 1) and returns
    u_M(x, maturity); ``predict_at`` gives prices at an earlier time.
    """

    def __init__(self, M=120, sigma=0.1, r=0.03, strike=100.0, maturity=1.0, method="rk",
                 kink_split=True, coefficient_quadrature_size=None, rtol=1e-10, atol=1e-12):
        self.M = M
        self.sigma = sigma
        self.r = r
        self.strike = strike
        self.maturity = maturity
        self.method = method
        self.kink_split = kink_split
        self.coefficient_quadrature_size = coefficient_quadrature_size
        self.rtol = rtol
        self.atol = atol

    def fit(self, X=None, y=None):
        params = BsParams(self.sigma, self.r)
        settings = ProjectionSettings(self.coefficient_quadrature_size, self.kink_split)
        c0 = project_payoff_bs(PayoffSpec(self.strike), self.M, settings)
        system = assemble_bs(params, self.M).with_initial(c0)
        self.path_ = evolve_path(system, self.maturity, Method(self.method), self.rtol, self.atol)
        self.initial_coefficients_ = c0
        self.coefficients_ = self.path_.final
        self.n_features_in_ = 1
        return self

    def _x(self, X):
        X = check_array(X)
        if X.shape[1] != 1:
            raise ValueError(f"expected 1 column (x), got {X.shape[1]}")
        return X[:, 0]

    def predict(self, X):
        check_is_fitted(self, "coefficients_")
        return np.atleast_1d(eval_bs_solution(self.coefficients_, self._x(X)))

    def predict_at(self, X, tau):
        """u_M(x, tau) for 0 <= tau <= maturity."""
        check_is_fitted(self, "path_")
        return np.atleast_1d(eval_bs_solution(self.path_(tau), self._x(X)))


class HermiteLaguerreGalerkinHeston(BaseEstimator):
    """Heston call prices from a Hermite(M) x Laguerre(N) expansion.

    ``predict`` takes rows (x, v) and returns u_{M,N}(x, v, maturity).
    """

    def __init__(self, M=35, N=30, kappa=5.0, theta=0.05, sigma_tilde=0.5, rho=-0.8, r=0.03,
                 strike=100.0, maturity=1.0, method="rk", kink_split=True,
                 coefficient_quadrature_size=None, rtol=1e-10, atol=1e-12):
        self.M = M
        self.N = N
        self.kappa = kappa
        self.theta = theta
        self.sigma_tilde = sigma_tilde
        self.rho = rho
        self.r = r
        self.strike = strike
        self.maturity = maturity
        self.method = method
        self.kink_split = kink_split
        self.coefficient_quadrature_size = coefficient_quadrature_size
        self.rtol = rtol
        self.atol = atol

    def fit(self, X=None, y=None):
        params = HestonParams(self.kappa, self.theta, self.sigma_tilde, self.rho, self.r)
        settings = ProjectionSettings(self.coefficient_quadrature_size, self.kink_split)
        c0 = project_payoff_heston(PayoffSpec(self.strike), self.M, self.N, settings)
        system = assemble_heston(params, self.M, self.N).with_initial(c0)
        self.path_ = evolve_heston_path(system, self.maturity, Method(self.method), self.rtol, self.atol)
        self.initial_coefficients_ = c0
        self.coefficients_ = self.path_.final
        self.feller_margin_ = params.feller_margin
        self.n_features_in_ = 2
        return self

    def _xv(self, X):
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError(f"expected 2 columns (x, v), got {X.shape[1]}")
        if np.any(X[:, 1] < 0):
            raise ValueError("variance column must be nonnegative")
        return X[:, 0], X[:, 1]

    def predict(self, X):
        check_is_fitted(self, "coefficients_")
        x, v = self._xv(X)
        return np.atleast_1d(eval_heston_solution(self.coefficients_, self.M, self.N, x, v))

    def predict_at(self, X, tau):
        check_is_fitted(self, "path_")
        x, v = self._xv(X)
        return np.atleast_1d(eval_heston_solution(self.path_(tau), self.M, self.N, x, v))
