"""Pointwise and weighted-L2 error measures."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np

from ._errors import DomainError
from .orthopoly import Family, gauss_rule
from .projection import _weighted_sum_of_squares

BS_HERMITE_SIZE = 251
HESTON_LAGUERRE_SIZE = 201


class NodeSetId(str, Enum):
    SET1 = "set1"
    SET2 = "set2"
    CUSTOM = "custom"


@dataclass(frozen=True)
class MoneynessNodeSet:
    id: NodeSetId
    gammas: tuple

    def __post_init__(self):
        object.__setattr__(self, "id", NodeSetId(self.id))
        g = tuple(float(x) for x in self.gammas)
        if not g or any(not x > 0 for x in g):
            raise DomainError("moneyness nodes must be a nonempty list of positive numbers")
        object.__setattr__(self, "gammas", g)

    @classmethod
    def set1(cls):
        """0.70, 0.71, ..., 1.30."""
        return cls(NodeSetId.SET1, tuple((70 + i) / 100 for i in range(61)))

    @classmethod
    def set2(cls):
        """1.00, 1.05, ..., 1.50."""
        return cls(NodeSetId.SET2, tuple((100 + 5 * i) / 100 for i in range(11)))

    @classmethod
    def custom(cls, gammas):
        return cls(NodeSetId.CUSTOM, tuple(gammas))


@dataclass
class PointwiseErrors:
    ae: dict
    re: dict
    undefined_re: list = field(default_factory=list)
    near_zero: list = field(default_factory=list)

    @property
    def aae(self) -> float:
        return float(np.mean(list(self.ae.values())))

    @property
    def are(self) -> float:
        return float(np.mean(list(self.re.values())))


def pointwise_errors(approx, ref, K: float, nodes: MoneynessNodeSet, v0: Optional[float] = None,
                     near_zero_threshold: float = 1e-2) -> PointwiseErrors:
    """AE and RE = |1 - approx/ref| at x = ln(gamma K) (and v = v0 if given).

    ``approx`` and ``ref`` are callables of x (or of x, v). Nodes where the
    reference is 0 get RE = inf and are listed in ``undefined_re``; nodes
    where it is below ``near_zero_threshold`` are listed in ``near_zero``
    since their RE is dominated by the tiny denominator.
    """
    gammas = np.array(nodes.gammas)
    x = np.log(gammas * K)
    args = (x,) if v0 is None else (x, np.full_like(x, v0))
    a = np.asarray(approx(*args), dtype=float)
    b = np.asarray(ref(*args), dtype=float)
    ae = np.abs(a - b)
    with np.errstate(divide="ignore", invalid="ignore"):
        re = np.where(b != 0, np.abs(1.0 - a / np.where(b != 0, b, 1.0)), np.inf)
    out = PointwiseErrors(dict(zip(nodes.gammas, ae.tolist())), dict(zip(nodes.gammas, re.tolist())))
    out.undefined_re = [g for g, bb in zip(nodes.gammas, b) if bb == 0]
    out.near_zero = [g for g, bb in zip(nodes.gammas, b) if abs(bb) < near_zero_threshold]
    return out


class Model(str, Enum):
    BS = "bs"
    HESTON = "heston"


@lru_cache(maxsize=None)
def l2_rules(model) -> tuple:
    """Hermite 251 for BS; Hermite 251 x Laguerre 201 for Heston."""
    model = Model(model)
    hermite = gauss_rule(Family.HERMITE, BS_HERMITE_SIZE)
    if model is Model.BS:
        return (hermite,)
    return hermite, gauss_rule(Family.LAGUERRE, HESTON_LAGUERRE_SIZE)


def _values(f, grid):
    return np.asarray(f if not callable(f) else f(*grid), dtype=float)


def l2_report(approx, ref, model, v_max: Optional[float] = None) -> float:
    """Squared weighted L2 error, the quantity tabulated as "L2 error".

    ``approx``/``ref`` are callables, or arrays already evaluated on the
    quadrature grid. For Heston, ``v_max`` restricts the sum to nodes with
    v <= v_max (a diagnostic; the default is the full grid).
    """
    rules = l2_rules(model)
    if len(rules) == 1:
        grid = (rules[0].nodes,)
        logw = rules[0].log_weights
    else:
        grid = tuple(np.meshgrid(rules[0].nodes, rules[1].nodes, indexing="ij"))
        logw = rules[0].log_weights[:, None] + rules[1].log_weights[None, :]
    diff = _values(approx, grid) - _values(ref, grid)
    diff = np.broadcast_to(diff, logw.shape)
    if v_max is not None:
        if len(rules) == 1:
            raise DomainError("v_max applies to the Heston model only")
        keep = grid[1] <= v_max
        diff, logw = diff[keep], logw[keep]
    return _weighted_sum_of_squares(diff, logw)


@dataclass
class ErrorReport:
    l2_squared: float
    set1: PointwiseErrors
    set2: PointwiseErrors
    spot: PointwiseErrors
    metadata: dict = field(default_factory=dict)

    @property
    def l2_error(self) -> float:
        return math.sqrt(self.l2_squared)

    @property
    def aae1(self):
        return self.set1.aae

    @property
    def are1(self):
        return self.set1.are

    @property
    def aae2(self):
        return self.set2.aae

    @property
    def are2(self):
        return self.set2.are


SPOT_GAMMAS = (0.7, 1.0, 1.3)


def error_report(approx, ref, K: float, model, v0: Optional[float] = None,
                 l2_approx=None, l2_ref=None, metadata: Optional[dict] = None) -> ErrorReport:
    """All table quantities for one solution.

    ``l2_approx``/``l2_ref`` override ``approx``/``ref`` for the L2 sum,
    e.g. with values precomputed on the quadrature grid.
    """
    l2 = l2_report(approx if l2_approx is None else l2_approx, ref if l2_ref is None else l2_ref, model)
    return ErrorReport(
        l2,
        pointwise_errors(approx, ref, K, MoneynessNodeSet.set1(), v0),
        pointwise_errors(approx, ref, K, MoneynessNodeSet.set2(), v0),
        pointwise_errors(approx, ref, K, MoneynessNodeSet.custom(SPOT_GAMMAS), v0),
        dict(metadata or {}, model=Model(model).value),
    )
