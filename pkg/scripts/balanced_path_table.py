"""Balanced scale pairing delta(eps) for a few exponent pairs: regime,
delta/eps^((b+1)/2) drift, and the fitted exponent of the eta residual
against (ab + b + 3a - 1)/2."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from _common import out_dir, parse_config
from rvmcg import io
from rvmcg.commutator import balanced_path, eta_exponent
from rvmcg.fitting import loglog_fit
from rvmcg.synth import ALPHA_CRIT, BETA_STAR


@dataclass(frozen=True)
class Config:
    alphas: tuple[float, ...] = (0.2, 0.3, 0.5, 0.7)
    betas: tuple[float, ...] = (0.24, 0.3, 0.5)
    eps_min: float = 1e-3
    eps_max: float = 1e-1
    n_eps: int = 21
    out: str = "results/balanced"


def main(cfg: Config) -> None:
    d = out_dir(cfg.out)
    eps = np.geomspace(cfg.eps_min, cfg.eps_max, cfg.n_eps)
    table, rows = [], []
    print(f"beta* = {BETA_STAR:.7f}, alpha_c = {ALPHA_CRIT:.5f}")
    print(f"{'alpha':>6} {'beta':>5} {'regime':>6} {'spread%':>8} {'eta fit':>8} {'formula':>8} {'max root res':>12}")
    for a in cfg.alphas:
        for b in cfg.betas:
            path = [balanced_path(a, b, e) for e in eps]
            rows += [(a, b, e, p.delta, p.eta_residual, p.regime) for e, p in zip(eps, path)]
            ratio = np.array([p.delta for p in path]) / eps ** ((b + 1) / 2)
            spread = 100 * (ratio.max() / ratio.min() - 1)
            fit = loglog_fit(eps, [p.eta_residual for p in path]).slope
            res = max(p.root_residual for p in path)
            table.append((a, b, path[0].regime, spread, fit, eta_exponent(a, b), res))
            print(f"{a:6.2f} {b:5.2f} {path[0].regime:>6} {spread:8.2f} {fit:8.3f} {eta_exponent(a, b):8.3f} {res:12.1e}")
    io.write_csv(d / "path.csv", ("alpha", "beta", "eps", "delta", "eta_residual", "regime"), rows)
    io.write_csv(d / "summary.csv", ("alpha", "beta", "regime", "ratio_spread_pct", "eta_slope", "eta_formula",
                                     "max_root_residual"), table)


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
