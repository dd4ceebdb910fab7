"""Monte Carlo oracle for the Heston call price (full-truncation Euler).

Run once; the result is frozen in tests/data/heston_mc_golden.json.

    python3 tools/mc_oracle.py --paths 10000000 --steps 1000
"""
import argparse
import json
import math
import time

import numpy as np
from numba import njit


@njit(cache=True)
def _simulate(x0, v0, kappa, theta, sigma, rho, r, K, T, paths, steps, seed):
    np.random.seed(seed)
    dt = T / steps
    sqdt = math.sqrt(dt)
    rho_c = math.sqrt(1.0 - rho * rho)
    total = 0.0
    total_sq = 0.0
    for _ in range(paths):
        x = x0
        v = v0
        for _ in range(steps):
            z_v = np.random.standard_normal()
            z_x = rho * z_v + rho_c * np.random.standard_normal()
            vp = v if v > 0.0 else 0.0
            sv = math.sqrt(vp) * sqdt
            x += (r - 0.5 * vp) * dt + sv * z_x
            v += kappa * (theta - vp) * dt + sigma * sv * z_v
        payoff = math.exp(x) - K
        if payoff < 0.0:
            payoff = 0.0
        total += payoff
        total_sq += payoff * payoff
    return total, total_sq


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--paths", type=int, default=10_000_000)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--out")
    a = p.parse_args()
    kappa, theta, sigma, rho, r, K, T, v0 = 5.0, 0.05, 0.5, -0.8, 0.03, 100.0, 1.0, 0.05
    x0 = math.log(K)
    t0 = time.time()
    s, s2 = _simulate(x0, v0, kappa, theta, sigma, rho, r, K, T, a.paths, a.steps, a.seed)
    disc = math.exp(-r * T)
    mean = s / a.paths
    var = s2 / a.paths - mean * mean
    result = {
        "params": {"kappa": kappa, "theta": theta, "sigma_tilde": sigma, "rho": rho, "r": r,
                   "strike": K, "maturity": T, "x": x0, "v": v0},
        "paths": a.paths, "steps": a.steps, "seed": a.seed,
        "price": disc * mean,
        "standard_error": disc * math.sqrt(var / a.paths),
        "seconds": time.time() - t0,
    }
    text = json.dumps(result, indent=2)
    print(text)
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(text + "\n")


if __name__ == "__main__":
    main()
