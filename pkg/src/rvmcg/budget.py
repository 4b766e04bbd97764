"""Conservation time series, the coarse-grained entropy defect, and the local
energy balance.

The entropy defect is the weak-form pairing

    D = int dt int dx int dxi  H(f^{eps,delta}) (d_t Phi + v^delta . grad_x Phi + F^{eps,delta} . grad_xi Phi)

with ``F^{eps,delta} = E^eps + v^delta x B^eps`` and a smooth, compactly
supported test function ``Phi(t, x, xi) = phi_t(t) phi_x(x) Theta_R(|xi|)``.
For a smooth solution of the transport equation it vanishes; what remains
comes from the commutators of mollification with the nonlinear terms.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .commutator import balanced_path
from .fitting import LogLogFit, loglog_fit
from .grid import (
    EntropyFn,
    SQUARE,
    XLOGX,
    _phase_integral,
    energy_flux_kinetic,
    entropy_integral,
    kinetic_energy_density,
    lp_norm,
    mass,
    momentum_total,
    spectral_dx,
    total_energy,
)
from .mollify import mollified_velocity, mollify, mollify_em

BUDGET_COLUMNS = ("t", "mass", "l1", "l2", "linf", "entropy_sq", "kinetic", "field", "total", "px", "py")


class InsufficientSnapshots(ValueError):
    pass


# ---------------------------------------------------------------------------
# global invariants

@dataclass(frozen=True)
class ConservationSeries:
    times: np.ndarray
    mass: np.ndarray
    lp_norms: dict[str, np.ndarray]  # "l1", "l2", "linf"
    entropies: dict[str, np.ndarray]
    kinetic: np.ndarray
    field: np.ndarray
    total: np.ndarray
    momentum: np.ndarray  # (nt, d)
    drifts: dict[str, float]

    def __post_init__(self):
        n = self.times.size
        arrays = [self.mass, self.kinetic, self.field, self.total, self.momentum,
                  *self.lp_norms.values(), *self.entropies.values()]
        if any(len(a) != n for a in arrays):
            raise ValueError("all series must have one entry per snapshot")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return self.times
        if name in ("mass", "kinetic", "field", "total"):
            return getattr(self, name)
        if name in self.lp_norms:
            return self.lp_norms[name]
        if name in self.entropies:
            return self.entropies[name]
        if name in ("px", "py"):
            k = "xy".index(name[1])
            if k < self.momentum.shape[1]:
                return self.momentum[:, k]
            return np.zeros_like(self.times)
        raise KeyError(name)

    def rows(self, columns: Sequence[str] = BUDGET_COLUMNS) -> list[tuple[float, ...]]:
        cols = []
        for c in columns:
            try:
                cols.append(self.column(c))
            except KeyError:
                cols.append(np.full(self.times.size, np.nan))
        return [tuple(float(c[i]) for c in cols) for i in range(self.times.size)]

    def to_csv(self, path, columns: Sequence[str] = BUDGET_COLUMNS) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for r in self.rows(columns):
                w.writerow([repr(v) for v in r])


def drift(series: np.ndarray, scale: Optional[float] = None) -> float:
    """``max_t |q(t) - q(0)|`` divided by ``scale`` (default ``|q(0)|``);
    absolute when the divisor is zero."""
    q = np.asarray(series, float)
    dev = float(np.max(np.abs(q - q[0])))
    den = abs(q[0]) if scale is None else abs(scale)
    return dev / den if den > 0 else dev


def conservation_report(traj, entropies: Sequence[EntropyFn] = (SQUARE,)) -> ConservationSeries:
    """Evaluate the global functionals on every snapshot of ``traj``.

    Entropies restricted to ``f >= 0`` are reported as NaN on snapshots
    where f undershoots zero by more than round-off.
    """
    snaps = list(traj.snapshots)
    if not snaps:
        raise InsufficientSnapshots("empty trajectory")
    d = snaps[0].grid.dxi_dims
    out = {k: [] for k in ("t", "mass", "l1", "l2", "linf", "kinetic", "field", "total")}
    ent = {H.name: [] for H in entropies}
    mom = []
    for s in snaps:
        e = total_energy(s)
        out["t"].append(s.t)
        out["mass"].append(mass(s.f))
        out["l1"].append(lp_norm(s.f, 1))
        out["l2"].append(lp_norm(s.f, 2))
        out["linf"].append(lp_norm(s.f, np.inf))
        out["kinetic"].append(e.kinetic)
        out["field"].append(e.field)
        out["total"].append(e.total)
        mom.append(momentum_total(s))
        for H in entropies:
            try:
                ent[H.name].append(entropy_integral(s.f, H))
            except ValueError:
                ent[H.name].append(float("nan"))
    arr = {k: np.asarray(v, float) for k, v in out.items()}
    ent_a = {k: np.asarray(v, float) for k, v in ent.items()}
    mom_a = np.asarray(mom, float).reshape(len(snaps), d)
    drifts = {k: drift(arr[k]) for k in ("mass", "l1", "l2", "linf", "kinetic", "field", "total")}
    drifts.update({k: drift(v) for k, v in ent_a.items()})
    # |xi| <= gamma and |E x B| <= (|E|^2 + B^2)/2, so the total energy bounds
    # |momentum| and is the natural scale when the momentum starts near zero
    for k in range(d):
        drifts["p" + "xy"[k]] = drift(mom_a[:, k], arr["total"][0])
    return ConservationSeries(
        arr["t"], arr["mass"], {k: arr[k] for k in ("l1", "l2", "linf")}, ent_a,
        arr["kinetic"], arr["field"], arr["total"], mom_a, drifts,
    )


# ---------------------------------------------------------------------------
# test functions

def _bump(r: np.ndarray) -> np.ndarray:
    """``exp(1 - 1/(1 - r^2))`` on |r| < 1, zero outside; equals 1 at r = 0."""
    r = np.asarray(r, float)
    out = np.zeros_like(r)
    m = np.abs(r) < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - r[m] ** 2))
    return out


def _bump_deriv(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, float)
    out = np.zeros_like(r)
    m = np.abs(r) < 1.0
    s = 1.0 - r[m] ** 2
    out[m] = np.exp(1.0 - 1.0 / s) * (-2.0 * r[m] / (s * s))
    return out


def _smooth_step(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """C-infinity step from 1 (u <= 0) to 0 (u >= 1) and its derivative."""
    u = np.asarray(u, float)
    val = np.where(u <= 0, 1.0, 0.0)
    der = np.zeros_like(u)
    m = (u > 0) & (u < 1)
    a = np.exp(-1.0 / u[m])
    b = np.exp(-1.0 / (1.0 - u[m]))
    val[m] = b / (a + b)
    da = a / u[m] ** 2  # d a / du
    db = -b / (1.0 - u[m]) ** 2  # d b / du
    der[m] = (db * a - b * da) / (a + b) ** 2
    return val, der


@dataclass(frozen=True)
class TestFunction:
    """``phi_t(t) phi_x(x) Theta_R(|xi|)``.

    ``t_window`` is given as fractions of the run; ``None`` uses the whole
    run (the bump vanishes at both ends). ``x_mode='constant'`` sets
    ``phi_x = 1``; ``'bump'`` uses a compact bump at ``x_center`` (fraction of
    Lx) with half-width ``x_halfwidth`` (fraction of Lx, at most 0.5).
    ``Theta_R`` is 1 for ``|xi| <= R`` and falls smoothly to 0 at ``2R``;
    ``R=None`` means ``0.4 * xi_max``.
    """

    __test__ = False  # not a pytest class

    t_window: Optional[tuple[float, float]] = None
    x_mode: Literal["constant", "bump"] = "constant"
    x_center: float = 0.5
    x_halfwidth: float = 0.5
    radius: Optional[float] = None

    def __post_init__(self):
        if self.x_mode not in ("constant", "bump"):
            raise ValueError("x_mode must be 'constant' or 'bump'")
        if not 0.0 < self.x_halfwidth <= 0.5:
            raise ValueError("x_halfwidth must lie in (0, 0.5]")
        if self.t_window is not None and not 0.0 <= self.t_window[0] < self.t_window[1] <= 1.0:
            raise ValueError("t_window must be an increasing pair inside [0, 1]")

    def time_factor(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(t, float)
        t0, t1 = t[0], t[-1]
        a, b = (0.0, 1.0) if self.t_window is None else self.t_window
        lo, hi = t0 + a * (t1 - t0), t0 + b * (t1 - t0)
        c, w = 0.5 * (lo + hi), 0.5 * (hi - lo)
        r = (t - c) / w
        return _bump(r), _bump_deriv(r) / w

    def x_factor(self, x: np.ndarray, lx: float) -> tuple[np.ndarray, np.ndarray]:
        if self.x_mode == "constant":
            return np.ones_like(x), np.zeros_like(x)
        w = self.x_halfwidth * lx
        dist = (x - self.x_center * lx + 0.5 * lx) % lx - 0.5 * lx
        r = dist / w
        return _bump(r), _bump_deriv(r) / w

    def xi_factor(self, xi: np.ndarray, xi_max: float) -> tuple[np.ndarray, np.ndarray]:
        """Theta_R at the nodes and its gradient, shapes ``nxi`` and ``(*nxi, d)``."""
        R = 0.4 * xi_max if self.radius is None else float(self.radius)
        rad = np.sqrt(np.sum(xi * xi, axis=-1))
        val, der = _smooth_step(rad / R - 1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(rad[..., None] > 0, xi / rad[..., None], 0.0)
        return val, (der / R)[..., None] * unit


# ---------------------------------------------------------------------------
# entropy defect

@dataclass(frozen=True)
class DefectReport:
    eps: float
    delta: float
    value: float  # signed pairing
    entropy_residual: float  # |value|
    bound_terms: tuple[float, float, float]  # d^{a+1} e^{a-1}, e^{a+b} d^{a-1}, d^a
    c_star: float = float("nan")
    radius: float = float("nan")

    def __post_init__(self):
        if not self.entropy_residual >= 0:
            raise ValueError("residual must be nonnegative")

    @property
    def bound_sum(self) -> float:
        return float(sum(self.bound_terms))

    @property
    def bound_prediction(self) -> float:
        return self.c_star * self.bound_sum


def bound_terms(alpha: float, beta: float, eps: float, delta: float) -> tuple[float, float, float]:
    return (
        delta ** (alpha + 1.0) * eps ** (alpha - 1.0),
        eps ** (alpha + beta) * delta ** (alpha - 1.0),
        delta**alpha,
    )


def _require(traj, n: int) -> list:
    snaps = list(traj.snapshots)
    if len(snaps) < n:
        raise InsufficientSnapshots(f"need at least {n} snapshots, got {len(snaps)}")
    return snaps


def entropy_defect(
    traj,
    H: EntropyFn,
    alpha: float,
    beta: float,
    eps: float,
    delta: float,
    testfn: TestFunction = TestFunction(),
    profile: str = "bump",
    c_star: float = float("nan"),
) -> DefectReport:
    """Weak-form entropy defect of the coarse-grained trajectory.

    The time integral is a trapezoid sum over the snapshots; ``phi_t`` and
    all its derivatives vanish at both ends of its window, so the rule is
    spectrally accurate on uniformly spaced snapshots. Snapshots outside the
    window contribute exactly zero.
    """
    snaps = _require(traj, 3)
    g = snaps[0].grid
    t = np.array([s.t for s in snaps])
    pt, dpt = testfn.time_factor(t)
    px, dpx = testfn.x_factor(g.x, g.lx)
    theta, dtheta = testfn.xi_factor(g.xi_mesh(), g.xi_max)
    vd = mollified_velocity(g, delta, profile)
    d = g.dxi_dims
    xs = (g.nx,) + (1,) * d
    vals = np.zeros(len(snaps))
    for n, s in enumerate(snaps):
        if pt[n] == 0.0 and dpt[n] == 0.0:
            continue
        fed = mollify(s.f, "both", eps, delta, profile)
        h = H.h(fed.values)
        emm = mollify_em(s.em, g, eps, profile)
        force = np.zeros(g.shape + (d,))
        force[..., 0] = emm.ex.reshape(xs)
        if d == 2:
            bz = emm.bz_.reshape(xs)
            force[..., 0] += vd[None, ..., 1] * bz
            force[..., 1] = emm.ey_.reshape(xs) - vd[None, ..., 0] * bz
        dphi = (
            dpt[n] * px.reshape(xs) * theta[None]
            + pt[n] * dpx.reshape(xs) * (vd[..., 0] * theta)[None]
            + pt[n] * px.reshape(xs) * np.sum(force * dtheta[None], axis=-1)
        )
        vals[n] = _phase_integral(h * dphi, g)
    value = float(np.trapezoid(vals, t))
    R = 0.4 * g.xi_max if testfn.radius is None else float(testfn.radius)
    return DefectReport(float(eps), float(delta), value, abs(value),
                        bound_terms(alpha, beta, eps, delta), float(c_star), R)


@dataclass(frozen=True)
class DefectSweep:
    alpha: float
    beta: float
    reports: list[DefectReport]
    c_star: float  # smallest constant with residual <= c_star * bound on every row
    decay: LogLogFit  # residual vs eps

    @property
    def decay_exponent(self) -> float:
        return self.decay.slope


def defect_sweep(
    traj,
    H: EntropyFn,
    alpha: float,
    beta: float,
    eps_list: Sequence[float],
    delta_list: Optional[Sequence[float]] = None,
    testfn: TestFunction = TestFunction(),
    profile: str = "bump",
) -> DefectSweep:
    """Entropy defect over paired scales; ``delta_list=None`` follows the
    balanced path ``delta(eps)``."""
    eps_list = [float(e) for e in eps_list]
    if delta_list is None:
        delta_list = [balanced_path(alpha, beta, e).delta for e in eps_list]
    if len(delta_list) != len(eps_list):
        raise ValueError("eps_list and delta_list must have equal length")
    raw = [entropy_defect(traj, H, alpha, beta, e, dl, testfn, profile) for e, dl in zip(eps_list, delta_list)]
    ratios = [r.entropy_residual / r.bound_sum for r in raw if r.bound_sum > 0]
    c = float(max(ratios)) if ratios else float("nan")
    reports = [DefectReport(r.eps, r.delta, r.value, r.entropy_residual, r.bound_terms, c, r.radius) for r in raw]
    fit = loglog_fit([r.eps for r in reports], [r.entropy_residual for r in reports], min_decades=0.5)
    return DefectSweep(alpha, beta, reports, c, fit)


# ---------------------------------------------------------------------------
# local energy balance

@dataclass(frozen=True)
class EnergyResidual:
    times: np.ndarray  # interior snapshot times
    field: np.ndarray  # (nt - 2, nx)
    l2: float  # sqrt(sum residual^2 dx dt) over interior snapshots


def energy_density(state) -> np.ndarray:
    """``int gamma f dxi + (|E|^2 + B^2)/2`` per x node."""
    em = state.em
    e = kinetic_energy_density(state.f) + 0.5 * em.ex**2
    if em.ey is not None:
        e = e + 0.5 * em.ey**2
    if em.bz is not None:
        e = e + 0.5 * em.bz**2
    return e


def energy_flux(state) -> np.ndarray:
    """``int xi_1 f dxi + (E x B)_x`` per x node."""
    q = energy_flux_kinetic(state.f)
    em = state.em
    if em.ey is not None and em.bz is not None:
        q = q + em.ey * em.bz
    return q


def local_energy_residual(traj) -> EnergyResidual:
    """Centred residual ``(e_{n+1} - e_{n-1}) / (t_{n+1} - t_{n-1}) + d_x q_n``
    at each interior snapshot, with a spectral x-derivative."""
    snaps = _require(traj, 3)
    g = snaps[0].grid
    t = np.array([s.t for s in snaps])
    e = [energy_density(s) for s in snaps]
    res = np.empty((len(snaps) - 2, g.nx))
    for n in range(1, len(snaps) - 1):
        res[n - 1] = (e[n + 1] - e[n - 1]) / (t[n + 1] - t[n - 1]) + spectral_dx(energy_flux(snaps[n]), g)
    w = 0.5 * (t[2:] - t[:-2])
    l2 = float(math.sqrt(float(np.sum((res**2).sum(axis=1) * w)) * g.dx))
    return EnergyResidual(t[1:-1], res, l2)


def refinement_order(coarse: float, fine: float, ratio: float = 2.0) -> float:
    """Observed order ``log(coarse/fine) / log(ratio)``."""
    if coarse <= 0 or fine <= 0:
        return float("nan")
    return math.log(coarse / fine) / math.log(ratio)


__all__ = [
    "BUDGET_COLUMNS", "ConservationSeries", "DefectReport", "DefectSweep", "EnergyResidual",
    "InsufficientSnapshots", "TestFunction", "bound_terms", "conservation_report", "defect_sweep",
    "drift", "energy_density", "energy_flux", "entropy_defect", "local_energy_residual",
    "refinement_order", "SQUARE", "XLOGX",
]
