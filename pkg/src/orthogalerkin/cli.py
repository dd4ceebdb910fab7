"""Command-line interface: ``orthogalerkin {price,table,surface,boundary}``.

Exit codes: 0 ok, 2 invalid configuration, 3 I/O failure, 4 numeric failure.
CSV layouts are documented in docs/csv_schema.md.
"""
from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import sys
from typing import Optional

import numpy as np

from . import experiments as ex
from ._errors import DomainError, NumericError, RangeError
from .boundary import BoundarySettings, boundary_solution, galerkin_interior
from .galerkin_bs import BsParams
from .galerkin_heston import HestonParams
from .metrics import SPOT_GAMMAS, MoneynessNodeSet, pointwise_errors
from .numerics import Method
from .projection import PayoffSpec, ProjectionSettings
from .reference import OptionSpec, bs_price, heston_lewis, heston_lewis_grid

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
TABLES = ("bs_l2", "bs_pointwise", "heston_l2", "heston_pointwise")


class ConfigError(Exception):
    pass


@dataclasses.dataclass
class RunConfig:
    model: str = "bs"
    sigma: float = ex.BS_TABLE_PARAMS.sigma
    r: Optional[float] = None
    kappa: float = ex.HESTON_TABLE_PARAMS.kappa
    theta: float = ex.HESTON_TABLE_PARAMS.theta
    sigma_tilde: float = ex.HESTON_TABLE_PARAMS.sigma_tilde
    rho: float = ex.HESTON_TABLE_PARAMS.rho
    v0: float = ex.HESTON_V0
    strike: float = ex.STRIKE
    maturity: float = ex.MATURITY
    M: Optional[int] = None
    N: int = 30
    method: str = "rk"
    coefficient_quadrature_size: Optional[int] = ex.TABLE_PROJECTION.coefficient_quadrature_size
    kink_split: bool = ex.TABLE_PROJECTION.kink_split
    gamma: float = 1.0
    s_step: Optional[float] = None
    v_values: Optional[list] = None
    h: float = 0.005
    time_quadrature_size: int = 64
    out: Optional[str] = None

    def __post_init__(self):
        self.model = str(self.model).lower()
        if self.model not in ("bs", "heston"):
            raise ConfigError(f"model must be 'bs' or 'heston', got {self.model!r}")
        if self.r is None:
            self.r = ex.BS_TABLE_PARAMS.r if self.model == "bs" else ex.HESTON_TABLE_PARAMS.r
        if self.M is None:
            self.M = 120 if self.model == "bs" else 35
        if self.s_step is None:
            self.s_step = 0.01 if self.model == "bs" else 0.1
        try:
            Method(self.method)
            self.bs_params()
            if self.model == "heston":
                self.heston_params()
            self.option()
            self.projection().size_for(self.M)
            BoundarySettings(self.h, self.time_quadrature_size)
            PayoffSpec(self.strike)
        except (ValueError, DomainError, RangeError) as exc:
            raise ConfigError(str(exc)) from exc
        for name in ("M", "N"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ConfigError(f"{name} must be a nonnegative integer")
        if not (self.gamma > 0 and self.s_step > 0 and self.v0 >= 0):
            raise ConfigError("gamma and s_step must be positive, v0 nonnegative")

    def bs_params(self):
        return BsParams(self.sigma, self.r)

    def heston_params(self):
        return HestonParams(self.kappa, self.theta, self.sigma_tilde, self.rho, self.r)

    def option(self):
        return OptionSpec(self.strike, self.maturity)

    def projection(self):
        return ProjectionSettings(self.coefficient_quadrature_size, self.kink_split)


def load_config(path: Optional[str], overrides: dict) -> RunConfig:
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return repr(float(value))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _run(cfg: RunConfig, M=None, N=None):
    method = Method(cfg.method)
    if cfg.model == "bs":
        return ex.run_bs(cfg.M if M is None else M, cfg.bs_params(), cfg.strike, cfg.maturity,
                         method, cfg.projection())
    return ex.run_heston(cfg.M if M is None else M, cfg.N if N is None else N, cfg.heston_params(),
                         cfg.strike, cfg.maturity, method, cfg.projection())


def cmd_price(cfg: RunConfig) -> str:
    run = _run(cfg)
    nodes = MoneynessNodeSet.custom([cfg.gamma])
    x = math.log(cfg.gamma * cfg.strike)
    if cfg.model == "bs":
        err = pointwise_errors(run.price, run.reference, cfg.strike, nodes)
        price, ref, v, n = run.price(x), run.reference(x), "", ""
    else:
        err = pointwise_errors(run.price, run.reference, cfg.strike, nodes, cfg.v0)
        price, ref, v, n = run.price(x, cfg.v0), run.reference(x, cfg.v0), cfg.v0, cfg.N
    header = ["model", "M", "N", "gamma", "x", "v", "price", "reference", "AE", "RE"]
    row = [cfg.model, cfg.M, n, cfg.gamma, x, v, price, ref, err.ae[cfg.gamma], err.re[cfg.gamma]]
    return _csv(header, [row])


def _table_configs(which: str):
    if which.startswith("bs"):
        return [(M, None) for M in ex.BS_TABLE_ORDERS]
    return list(ex.HESTON_TABLE_ORDERS)


def cmd_table(cfg: RunConfig, which: str) -> str:
    if which not in TABLES:
        raise ConfigError(f"table must be one of {', '.join(TABLES)}")
    model = "bs" if which.startswith("bs") else "heston"
    cfg = dataclasses.replace(cfg, model=model, r=cfg.r if cfg.model == model else None,
                              M=None, s_step=None)
    rows = []
    for M, N in _table_configs(which):
        run = _run(cfg, M, N)
        rep = ex.bs_report(run) if model == "bs" else ex.heston_report(run, cfg.v0)
        key = [M] if model == "bs" else [M, N]
        if which.endswith("l2"):
            rows.append(key + [rep.l2_squared, rep.aae1, rep.are1, rep.aae2, rep.are2])
        else:
            rows.append(key + [rep.spot.ae[g] for g in SPOT_GAMMAS] + [rep.spot.re[g] for g in SPOT_GAMMAS])
    key = ["M"] if model == "bs" else ["M", "N"]
    if which.endswith("l2"):
        header = key + ["L2", "AAE_1", "ARE_1", "AAE_2", "ARE_2"]
    else:
        header = key + [f"AE_{g}" for g in SPOT_GAMMAS] + [f"RE_{g}" for g in SPOT_GAMMAS]
    return _csv(header, rows)


def cmd_surface(cfg: RunConfig) -> str:
    run = _run(cfg)
    n = int(round(2 * cfg.strike / cfg.s_step))
    S = np.arange(1, n + 1) * cfg.s_step
    x = np.log(S)
    if cfg.model == "bs":
        u = run.price(x)
        ref = bs_price(cfg.bs_params(), cfg.option(), x, cfg.maturity)
        ae = np.abs(u - ref)
        with np.errstate(divide="ignore", invalid="ignore"):
            re = np.where(ref != 0, np.abs(1 - u / np.where(ref != 0, ref, 1.0)), np.inf)
        return _csv(["S", "x", "u_M", "u_BS", "AE", "RE"], zip(S, x, u, ref, ae, re))
    v = ex.surface_grid_v() if cfg.v_values is None else np.asarray(cfg.v_values, dtype=float)
    if np.any(v < 0):
        raise ConfigError("v_values must be nonnegative")
    ref = heston_lewis_grid(cfg.heston_params(), cfg.option(), x, v, cfg.maturity).price
    rows = []
    for iv, vv in enumerate(v):
        u = run.price(x, vv)
        r_ = ref[:, iv]
        ae = np.abs(u - r_)
        with np.errstate(divide="ignore", invalid="ignore"):
            re = np.where(r_ != 0, np.abs(1 - u / np.where(r_ != 0, r_, 1.0)), np.inf)
        rows.extend(zip(S, x, np.full_like(x, vv), u, r_, ae, re))
    return _csv(["S", "x", "v", "u_MN", "u_H", "AE", "RE"], rows)


def cmd_boundary(cfg: RunConfig) -> str:
    cfg = dataclasses.replace(cfg, model="heston") if cfg.model != "heston" else cfg
    run = _run(cfg)
    settings = BoundarySettings(cfg.h, cfg.time_quadrature_size)
    x = ex.log_moneyness_window(cfg.strike)
    payoff = PayoffSpec(cfg.strike)
    interior = galerkin_interior(run.path, run.M, run.N, settings.h)
    ub = boundary_solution(cfg.heston_params(), payoff, interior, x, cfg.maturity, settings)
    u_mn = run.price(x, 0.0)
    u_h = heston_lewis(cfg.heston_params(), cfg.option(), x, 0.0, cfg.maturity).price
    return _csv(["x", "payoff", "u_B", "u_MN_at_v0", "u_H_at_v0"], zip(x, payoff(x), ub, u_mn, u_h))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orthogalerkin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("price", "table", "surface", "boundary"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON document with RunConfig keys")
        p.add_argument("--model", choices=["bs", "heston"])
        p.add_argument("--M", type=int)
        p.add_argument("--N", type=int)
        p.add_argument("--method", choices=[m.value for m in Method])
        p.add_argument("--out", help="write CSV here instead of stdout")
        if name == "price":
            p.add_argument("--gamma", type=float, help="moneyness S/K")
        if name == "table":
            p.add_argument("which", choices=TABLES)
        if name == "surface":
            p.add_argument("--s-step", dest="s_step", type=float)
            p.add_argument("--v", dest="v_values", type=float, action="append",
                           help="variance slice (repeatable; Heston only)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "which")}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "price":
            text = cmd_price(cfg)
        elif args.command == "table":
            text = cmd_table(cfg, args.which)
        elif args.command == "surface":
            text = cmd_surface(cfg)
        else:
            text = cmd_boundary(cfg)
    except (ConfigError, DomainError, RangeError) as exc:
        print(f"orthogalerkin: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"orthogalerkin: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"orthogalerkin: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
