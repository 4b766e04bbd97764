"""Scaling of the free-streaming and Lorentz commutator norms with the
mollification scales on an ensemble of synthetic fields.

Fits the delta-slope of the free-streaming norm at fixed eps, and the
eps-slopes of the free-streaming and electric norms at fixed delta, against
alpha + 1, alpha - 1 and alpha + beta.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from _common import out_dir, parse_config
from rvmcg import io
from rvmcg.commutator import CommutatorReport, ensemble_sweep, fs_bound_constant
from rvmcg.grid import PhaseGrid
from rvmcg.synth import onsager_ensemble


@dataclass(frozen=True)
class Config:
    alpha: float = 0.5
    beta: float = 0.5
    n: int = 512
    members: int = 16
    n_scales: int = 6
    smallest: float = 2.0  # in cells
    largest: float = 32.0
    fixed: float = 8.0  # the held scale, in cells
    workers: int = 4
    seed: int = 0
    out: str = "results/scaling"


def main(cfg: Config) -> None:
    d = out_dir(cfg.out)
    g = PhaseGrid(cfg.n, 1.0, (cfg.n,), 4.0)
    dx, dxi = g.dx, g.dxi[0]
    src = []
    for k in range(cfg.members):
        smp = onsager_ensemble(cfg.alpha, cfg.beta, g, seed=cfg.seed + k)
        src.append((smp.f, smp.em))
    eps = np.geomspace(cfg.smallest * dx, cfg.largest * dx, cfg.n_scales)
    delta = np.geomspace(cfg.smallest * dxi, cfg.largest * dxi, cfg.n_scales)
    grid_rep = ensemble_sweep(src, eps, delta, workers=cfg.workers)
    io.write_csv(d / "scaling.csv", CommutatorReport.CSV_COLUMNS, grid_rep.table())
    by_delta = ensemble_sweep(src, [cfg.fixed * dx], delta, workers=cfg.workers)
    by_eps = ensemble_sweep(src, eps, [cfg.fixed * dxi], workers=cfg.workers)
    a, b = cfg.alpha, cfg.beta
    fits = {
        "fs_norm vs delta": (by_delta.slope("fs_norm", "delta"), a + 1),
        "fs_norm vs eps": (by_eps.slope("fs_norm", "eps"), a - 1),
        "te_norm vs eps": (by_eps.slope("te_norm", "eps"), a + b),
        "lorentz_norm vs eps": (by_eps.slope("lorentz_norm", "eps"), float("nan")),
    }
    c = fs_bound_constant(grid_rep, a)
    summary = {k: {"slope": f.slope, "ci95": f.ci_halfwidth, "target": t} for k, (f, t) in fits.items()}
    summary["fs_constant"] = {"min": float(c.min()), "max": float(c.max()), "spread": float(c.max() / c.min())}
    io.write_json(d / "slopes.json", summary)
    for k, (f, t) in fits.items():
        print(f"{k:22s} slope {f.slope:7.3f} +/- {f.ci_halfwidth:.3f}   target {t:.3f}")
    print(f"C_fs over the grid: {c.min():.4g} .. {c.max():.4g} (max/min {c.max() / c.min():.3f})")


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
