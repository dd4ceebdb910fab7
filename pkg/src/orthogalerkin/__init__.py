"""Hermite and Hermite x Laguerre Galerkin solvers for Black-Scholes and Heston call prices."""
from ._errors import DomainError, NumericError, RangeError, TruncationWarning
from .estimators import HermiteGalerkinBS, HermiteLaguerreGalerkinHeston

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "NumericError",
    "RangeError",
    "TruncationWarning",
    "HermiteGalerkinBS",
    "HermiteLaguerreGalerkinHeston",
]
