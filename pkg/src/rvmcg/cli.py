"""Command-line drivers.

Exit codes: 0 success, 2 bad usage or configuration, 3 missing or malformed
input files, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import budget, commutator, io, mollify, solver, synth
from .grid import EMField, RVMState, SQUARE

log = logging.getLogger("rvmcg")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4


def _out_dir(cfg: io.RunConfig, override: Optional[str]) -> Path:
    d = Path(override or cfg.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _announce(cfg: io.RunConfig) -> None:
    print("# effective configuration", file=sys.stderr)
    sys.stderr.write(cfg.dump())


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(cfg: io.RunConfig, out: Optional[str] = None) -> Path:
    """Run the configured preset; write snapshots every ``stride`` steps
    (plus the initial one), ``budget.csv`` and ``drifts.json``."""
    d = _out_dir(cfg, out)
    grid = cfg.grid
    state = solver.initialize(cfg.preset, grid, {"theta": cfg.theta})
    scfg = solver.SolverConfig(dt=cfg.time_step, n_steps=cfg.steps, interpolation=cfg.interp)
    traj = solver.run(state, scfg, stride=cfg.stride)
    for k, s in enumerate(traj.snapshots):
        io.write_snapshot(d / io.snapshot_name(k), s)
    rep = budget.conservation_report(traj)
    io.write_csv(d / "budget.csv", budget.BUDGET_COLUMNS, rep.rows())
    io.write_json(d / "drifts.json", {"drifts": rep.drifts, "snapshots": len(traj)})
    io.atomic_write_text(d / "config.txt", cfg.dump())
    return d


def cmd_coarse_grain(snapshot: str, eps: float, delta: float, out: str) -> Path:
    """Write the snapshot of ``f^{eps,delta}`` (fields mollified in x at eps)."""
    s = io.read_snapshot(snapshot)
    f = mollify.mollify(s.f, "both", eps, delta)
    em = mollify.mollify_em(s.em, s.grid, eps)
    io.write_snapshot(out, RVMState(s.t, f, em))
    return Path(out)


def _load_source(path: str):
    p = Path(path)
    if p.is_dir():
        return io.read_trajectory(p)
    if p.is_file():
        return io.read_snapshot(p)
    raise FileNotFoundError(f"no such snapshot or directory: {path}")


def _slopes_payload(rep: commutator.ScalingReport) -> dict:
    return {
        f"{s.quantity}/{s.axis}@{s.fixed!r}": {
            "slope": s.fit.slope, "ci95": s.fit.ci_halfwidth, "r_squared": s.fit.r_squared,
            "n_points": s.fit.n_points, "flagged": s.fit.flagged,
        }
        for s in rep.fits
    }


def _write_scaling(d: Path, rep: commutator.ScalingReport, extra: dict) -> None:
    io.write_csv(d / "scaling.csv", commutator.CommutatorReport.CSV_COLUMNS, rep.table())
    io.write_json(d / "slopes.json", {**extra, "fits": _slopes_payload(rep)})


def cmd_commutators(source: str, cfg: io.RunConfig, out: Optional[str] = None, workers: int = 1) -> Path:
    d = _out_dir(cfg, out)
    src = _load_source(source)
    grid = (src.snapshots[0] if hasattr(src, "snapshots") else src).grid
    eps, delta = cfg.replace(nx=grid.nx, lx=grid.lx, nxi=grid.nxi, xi_max=grid.xi_max).scales()
    rep = commutator.scaling_sweep(src, eps, delta, cfg.p, cfg.r, workers=workers)
    _write_scaling(d, rep, {"source": str(source), "p": cfg.p, "r": cfg.r})
    return d


def _reference(values: Sequence[float], target: float) -> float:
    return min(values, key=lambda v: abs(np.log(v / target)))


def cmd_scaling(cfg: io.RunConfig, out: Optional[str] = None, workers: int = 1) -> Path:
    """Commutator sweep over an ensemble of synthetic (f, E, B) with
    exponents (alpha, beta); slopes fitted to the ensemble-mean norms."""
    d = _out_dir(cfg, out)
    grid = cfg.grid
    eps, delta = cfg.scales()
    sources = []
    for k in range(cfg.ensemble):
        smp = synth.onsager_ensemble(cfg.alpha, cfg.beta, grid, cfg.seed + k)
        sources.append((smp.f, smp.em))
    rep = commutator.ensemble_sweep(sources, eps, delta, cfg.p, cfg.r, workers=workers)
    e_ref = _reference(eps, 8 * grid.dx)
    d_ref = _reference(delta, 8 * max(grid.dxi))
    a, b = cfg.alpha, cfg.beta
    headline = {}
    for q, axis, fixed, target in (
        ("fs_norm", "delta", e_ref, a + 1.0),
        ("fs_norm", "eps", d_ref, a - 1.0),
        ("te_norm", "eps", d_ref, a + b),
    ):
        try:
            fit = rep.slope(q, axis, fixed)
        except KeyError:
            continue
        headline[f"{q}/{axis}"] = {"slope": fit.slope, "target": target, "fixed": fixed}
    _write_scaling(d, rep, {
        "alpha": a, "beta": b, "ensemble": cfg.ensemble, "seed": cfg.seed,
        "condition": synth.onsager_condition(a, b), "headline": headline,
    })
    return d


def cmd_budget(traj_dir: str, cfg: io.RunConfig, out: Optional[str] = None) -> Path:
    """Conservation CSV, entropy defect along the balanced path (CSV) and a
    JSON summary for a directory of snapshots."""
    d = _out_dir(cfg, out)
    traj = io.read_trajectory(traj_dir)
    g = traj.snapshots[0].grid
    rep = budget.conservation_report(traj)
    io.write_csv(d / "budget.csv", budget.BUDGET_COLUMNS, rep.rows())
    summary: dict = {"drifts": rep.drifts, "snapshots": len(traj)}
    if len(traj) >= 3:
        eps = cfg.eps_list or tuple(float(v) for v in np.geomspace(4 * g.dx, max(0.1 * g.lx, 16 * g.dx), 7))
        sw = budget.defect_sweep(traj, SQUARE, cfg.alpha, cfg.beta, eps)  # balanced path
        io.write_csv(d / "defect.csv", ("eps", "delta", "residual", "bound_sum", "bound_prediction"),
                     [(r.eps, r.delta, r.entropy_residual, r.bound_sum, r.bound_prediction) for r in sw.reports])
        er = budget.local_energy_residual(traj)
        summary.update({
            "defect_decay_exponent": sw.decay_exponent,
            "defect_c_star": sw.c_star,
            "energy_residual_l2": er.l2,
        })
    else:
        log.warning("fewer than 3 snapshots: defect and local energy residual skipped")
    io.write_json(d / "summary.json", summary)
    return d


def cmd_synth(cfg: io.RunConfig, kind: str, exponent: Optional[float], out: str) -> Path:
    """Synthetic f on the configured grid with zero fields, as a snapshot."""
    a = cfg.alpha if exponent is None else exponent
    f = synth.generate(synth.SynthSpec(a, kind, cfg.seed), cfg.grid)
    em = EMField.zeros(cfg.nx, full=len(cfg.nxi) == 2)
    io.write_snapshot(out, RVMState(0.0, f, em))
    return Path(out)


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rvmcg", description="Coarse-grained relativistic Vlasov-Maxwell diagnostics")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="key = value configuration file (defaults if omitted)")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        return p

    with_config(sub.add_parser("simulate", help="run a preset and write snapshots"))
    p = sub.add_parser("coarse-grain", help="mollify a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--out", required=True, help="output snapshot path")
    p = with_config(sub.add_parser("commutators", help="commutator sweep of a snapshot or run"))
    p.add_argument("source", help="snapshot file or directory of snapshots")
    p.add_argument("--threads", type=int, default=1)
    p = with_config(sub.add_parser("scaling", help="commutator scaling over a synthetic ensemble"))
    p.add_argument("--threads", type=int, default=1)
    p = with_config(sub.add_parser("budget", help="conservation and entropy-defect reports"))
    p.add_argument("trajectory", help="directory of snapshots")
    p = sub.add_parser("synth", help="write a synthetic field as a snapshot")
    p.add_argument("--config")
    p.add_argument("--kind", default="weierstrass", choices=synth.KINDS)
    p.add_argument("--exponent", type=float, help="defaults to analysis.alpha")
    p.add_argument("--out", required=True, help="output snapshot path")
    sub.add_parser("show-config", help="print the default configuration").add_argument("--config")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = io.RunConfig.load(getattr(args, "config", None))
        if args.command == "show-config":
            sys.stdout.write(cfg.dump())
            return EXIT_OK
        if args.command != "coarse-grain":
            _announce(cfg)
        if args.command == "simulate":
            res = cmd_simulate(cfg, args.out)
        elif args.command == "coarse-grain":
            res = cmd_coarse_grain(args.snapshot, args.eps, args.delta, args.out)
        elif args.command == "commutators":
            res = cmd_commutators(args.source, cfg, args.out, args.threads)
        elif args.command == "scaling":
            res = cmd_scaling(cfg, args.out, args.threads)
        elif args.command == "budget":
            res = cmd_budget(args.trajectory, cfg, args.out)
        else:
            res = cmd_synth(cfg, args.kind, args.exponent, args.out)
    except (io.ConfigError, mollify.UnderResolvedKernel, synth.NyquistError) as exc:
        print(f"rvmcg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, io.SnapshotError) as exc:
        print(f"rvmcg: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (solver.SolverError, FloatingPointError) as exc:
        print(f"rvmcg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"rvmcg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(res)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
