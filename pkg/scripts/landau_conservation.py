"""Landau-damping run on the 1D2V benchmark grid: conservation drifts and the
order of the total-energy drift under time-step halving."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from _common import out_dir, parse_config
from rvmcg import io
from rvmcg.budget import BUDGET_COLUMNS, conservation_report, drift
from rvmcg.grid import PhaseGrid
from rvmcg.solver import LANDAU_BENCHMARK, SolverConfig, initialize, run


@dataclass(frozen=True)
class Config:
    steps: int = LANDAU_BENCHMARK["steps"]
    cfl: float = 0.1  # dt / dx
    refinements: int = 2  # runs at dt, dt/2, ...
    stride: int = 50
    out: str = "results/landau"


def main(cfg: Config) -> None:
    d = out_dir(cfg.out)
    b = LANDAU_BENCHMARK
    g = PhaseGrid(**b["grid"])
    rows = []
    for k in range(cfg.refinements):
        s = initialize("landau_perturbation", g, b["params"])
        tr = run(s, SolverConfig(dt=cfg.cfl * g.dx / 2**k, n_steps=cfg.steps * 2**k), stride=cfg.stride * 2**k)
        ser = {key: np.asarray(v) for key, v in tr.series.items()}
        rows.append((g.dx * cfg.cfl / 2**k, drift(ser["mass"]), drift(ser["l2"]), drift(ser["total"]),
                     max(ser["gauss"])))
        if k == 0:
            io.write_csv(d / "budget.csv", BUDGET_COLUMNS, conservation_report(tr).rows())
            io.write_csv(d / "field_energy.csv", ("t", "total"), zip(ser["t"], ser["total"]))
    io.write_csv(d / "drifts.csv", ("dt", "mass", "l2", "energy", "gauss_max"), rows)
    print(f"{'dt':>10} {'mass':>10} {'L2':>10} {'energy':>10} {'order':>6}")
    for k, r in enumerate(rows):
        order = "" if k == 0 else f"{np.log2(rows[k - 1][3] / r[3]):6.2f}"
        print(f"{r[0]:10.4g} {r[1]:10.2e} {r[2]:10.2e} {r[3]:10.2e} {order:>6}")


if __name__ == "__main__":
    main(parse_config(Config, __doc__))
