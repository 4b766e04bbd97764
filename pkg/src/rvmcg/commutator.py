"""Commutators between mollification and the transport fields.

All coarse-graining is at ``eta = 0``: f is mollified in x at scale ``eps``
and in momentum at scale ``delta``. x-derivatives are spectral; momentum
divergences use second-order differences (one-sided at the cutoff).

Free streaming::

    C_fs = d_x [ (v_x f)^{eps,delta} - v_x^delta f^{eps,delta} ]

evaluated either directly or through the increment identity

    (v g)^delta - v^delta g^delta = r_delta(v, g) + (g^delta - g)(v - v^delta),
    g = f^eps.

Lorentz force, ``F = E + v x B`` with ``F^{eps,delta} = E^eps + v^delta x B^eps``::

    (F f)^{eps,delta} - F^{eps,delta} f^{eps,delta} = T_E + T_B1 + T_B2 + T_B3
    T_E  = (E f^delta)^eps - E^eps f^{eps,delta}
    T_B1 = (v x B f)^{eps,delta} - v x (B f)^{eps,delta}
    T_B2 = v x [ (B f^delta)^eps - B^eps f^{eps,delta} ]
    T_B3 = (v - v^delta) x B^eps f^{eps,delta}

In 1D2V ``v x B = (v_y B_z, -v_x B_z)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Any, Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .fitting import LogLogFit, loglog_fit
from .grid import DistField, EMField, PhaseGrid, RVMState, lp_norm, mixed_norm, spectral_dx, velocity_mesh
from .kinematics import velocity
from .mollify import Profile, convolve_x, convolve_xi, mollified_velocity, x_kernel, xi_kernel

Operand = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


# ---------------------------------------------------------------------------
# increment remainder

def _shift_xi(a: np.ndarray, shifts: Sequence[int]) -> np.ndarray:
    """``a(xi - s*dxi)`` over the trailing momentum axes, zero outside."""
    out = np.zeros_like(a)
    d = len(shifts)
    src = [slice(None)] * (a.ndim - d)
    dst = [slice(None)] * (a.ndim - d)
    for s, n in zip(shifts, a.shape[a.ndim - d:]):
        if abs(s) >= n:
            return out
        if s >= 0:
            src.append(slice(0, n - s))
            dst.append(slice(s, n))
        else:
            src.append(slice(-s, n))
            dst.append(slice(0, n + s))
    out[tuple(dst)] = a[tuple(src)]
    return out


def _sample(op: Operand, grid: PhaseGrid, jx: int, jw: Sequence[int]) -> np.ndarray:
    """Operand evaluated at ``(x - jx dx, xi - jw dxi)``, broadcastable to the
    phase-space shape."""
    d = grid.dxi_dims
    if callable(op):
        w = np.asarray(jw, float) * np.asarray(grid.dxi)
        return np.asarray(op(grid.xi_mesh() - w))[None]
    a = np.asarray(op, float)
    if a.ndim == 1:  # x only, constant in xi
        return np.roll(a, jx).reshape((-1,) + (1,) * d)
    if jx:
        a = np.roll(a, jx, axis=0)
    if any(jw):
        a = _shift_xi(a, jw)
    return a


def remainder_r(
    a: Operand,
    b: Operand,
    grid: PhaseGrid,
    eps: Optional[float] = None,
    delta: Optional[float] = None,
    profile: Profile = "bump",
) -> np.ndarray:
    """Kernel-weighted mean of the product of increments of ``a`` and ``b``::

        r(x, xi) = sum_{y,w} rho_eps(y) rho_delta(w)
                   (a(x-y, xi-w) - a(x, xi)) (b(x-y, xi-w) - b(x, xi))

    Operands are full phase-space arrays (periodic in x, zero beyond the
    momentum cutoff), x-only arrays of shape ``(nx,)``, or callables of the
    momentum mesh (evaluated exactly at shifted momenta). Omitting ``eps`` or
    ``delta`` drops that convolution. Evaluated by direct summation over the
    stencil.
    """
    if eps is None and delta is None:
        raise ValueError("at least one of eps, delta is required")
    d = grid.dxi_dims
    if eps is not None:
        kx = x_kernel(grid, eps, profile)
        xw = kx.weights
        xj = np.arange(xw.size) - kx.half_width[0]
    else:
        xw, xj = np.ones(1), np.zeros(1, int)
    if delta is not None:
        kv = xi_kernel(grid, delta, profile)
        vw = kv.weights.reshape(-1)
        idx = np.stack(np.meshgrid(*[np.arange(n) - h for n, h in zip(kv.weights.shape, kv.half_width)],
                                   indexing="ij"), axis=-1).reshape(-1, d)
    else:
        vw, idx = np.ones(1), np.zeros((1, d), int)
    a0 = _sample(a, grid, 0, (0,) * d)
    b0 = _sample(b, grid, 0, (0,) * d)
    out = np.zeros(grid.shape)
    for wx, jx in zip(xw, xj):
        if wx == 0.0:
            continue
        for wv, jw in zip(vw, idx):
            if wv == 0.0:
                continue
            jw = tuple(int(j) for j in jw)
            da = _sample(a, grid, int(jx), jw) - a0
            db = _sample(b, grid, int(jx), jw) - b0
            out += (wx * wv) * (da * db)
    return out


# ---------------------------------------------------------------------------
# free streaming

class FSResult(NamedTuple):
    field: np.ndarray
    norm: float


def _vx(xi: np.ndarray) -> np.ndarray:
    return velocity(xi)[..., 0]


def fs_commutator(
    f: DistField,
    eps: float,
    delta: float,
    p: float = 2.0,
    route: str = "identity",
    profile: Profile = "bump",
) -> FSResult:
    """``d_x[(v_x f)^{eps,delta} - v_x^delta f^{eps,delta}]`` and its L^p norm."""
    g = f.grid
    fe = convolve_x(f.values, x_kernel(g, eps, profile))
    kv = xi_kernel(g, delta, profile)
    vx = velocity_mesh(g)[..., 0]
    vxd = mollified_velocity(g, delta, profile)[..., 0]
    if route == "identity":
        r = remainder_r(_vx, fe, g, delta=delta, profile=profile)
        c = r + (convolve_xi(fe, kv) - fe) * (vx - vxd)[None]
    elif route == "direct":
        c = convolve_xi(fe * vx[None], kv) - vxd[None] * convolve_xi(fe, kv)
    else:
        raise ValueError(f"route must be 'identity' or 'direct', got {route!r}")
    out = spectral_dx(c, g, axis=0)
    return FSResult(out, lp_norm(out, p, g))


# ---------------------------------------------------------------------------
# Lorentz force

def _div_xi(comps: Sequence[np.ndarray], grid: PhaseGrid) -> np.ndarray:
    out = np.zeros(grid.shape)
    for k, c in enumerate(comps):
        edge = 2 if grid.nxi[k] >= 3 else 1
        out += np.gradient(c, grid.dxi[k], axis=1 + k, edge_order=edge)
    return out


def _cross_z(a: Sequence[np.ndarray], bz: np.ndarray) -> list[np.ndarray]:
    """``a x (bz e_z)`` for in-plane ``a``."""
    return [a[1] * bz, -a[0] * bz]


def _bcast_x(a: np.ndarray, d: int) -> np.ndarray:
    return a.reshape((-1,) + (1,) * d)


@dataclass
class CommutatorReport:
    eps: float
    delta: float
    fs_norm: float
    te_norm: float
    tb1_norm: float
    tb2_norm: float
    tb3_norm: float
    lorentz_norm: float
    tb11_norm: float = 0.0
    parts: dict = field(default_factory=dict, repr=False)  # divergence fields

    CSV_COLUMNS = ("eps", "delta", "fs_norm", "te_norm", "tb1_norm", "tb2_norm", "tb3_norm", "lorentz_norm")

    def row(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, c)) for c in self.CSV_COLUMNS)

    @property
    def parts_sum(self) -> float:
        return self.te_norm + self.tb1_norm + self.tb2_norm + self.tb3_norm


def _tb11_kernel(grid: PhaseGrid, delta: float, profile: Profile, n_r: int = 48, n_theta: int = 64) -> np.ndarray:
    """``K(xi) = int grad rho_delta(w) . ((v(xi-w) - v(xi)) x e_z) dw``.

    K vanishes in the continuum because v is a gradient field. It depends on
    xi only, so it is integrated with a polar rule (Gauss-Legendre in |w|,
    trapezoid in angle) on the continuum kernel rather than on the lattice
    stencil, which resolves the kernel derivative far more accurately.
    """
    from .mollify import _profile, _profile_deriv

    s, ws = np.polynomial.legendre.leggauss(n_r)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    norm = 2.0 * np.pi * np.sum(ws * _profile(s, profile) * s)
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    unit = np.stack([np.cos(th), np.sin(th)], axis=-1)
    xi = grid.xi_mesh()
    v0 = velocity(xi)
    out = np.zeros(grid.nxi)
    for sk, wk in zip(s, ws):
        # rho_delta'(r) r dr dtheta with r = delta s
        radial = _profile_deriv(np.array([sk]), profile)[0] / (delta**3 * norm) * (delta * sk) * delta * wk
        if radial == 0.0:
            continue
        for u in unit:
            dv = velocity(xi - delta * sk * u) - v0
            out += radial * (2.0 * np.pi / n_theta) * (u[0] * dv[..., 1] - u[1] * dv[..., 0])
    return out


def lorentz_commutator(
    f: DistField,
    em: EMField,
    eps: float,
    delta: float,
    p: float = 2.0,
    r: float = 2.0,
    profile: Profile = "bump",
    keep_fields: bool = False,
    with_fs: bool = True,
) -> CommutatorReport:
    """Lorentz-force commutator, its four parts and their mixed
    ``L^p_xi(L^r_x)`` norms (outer momentum, inner x).

    ``fs_norm`` is the free-streaming commutator norm in ``L^p``. The
    ``T_B11`` piece is evaluated by quadrature of its kernel; it vanishes
    analytically.
    """
    g = f.grid
    d = g.dxi_dims
    kx = x_kernel(g, eps, profile)
    kv = xi_kernel(g, delta, profile)
    X = lambda a: convolve_x(a, kx)
    fd = convolve_xi(f.values, kv)
    fed = X(fd)
    E = [em.ex] if d == 1 else [em.ex, em.ey_]
    te = [X(_bcast_x(e, d) * fd) - _bcast_x(X(e), d) * fed for e in E]
    parts = {"te": _div_xi(te, g)}
    zero = np.zeros(g.shape)
    tb11 = 0.0
    if d == 2:
        v = velocity_mesh(g)
        vc = [v[..., 0][None], v[..., 1][None]]
        vd = mollified_velocity(g, delta, profile)
        vdc = [vd[..., 0][None], vd[..., 1][None]]
        bz = _bcast_x(em.bz_, d)
        bze = _bcast_x(X(em.bz_), d)
        # (v x B f)^{eps,delta}, using that B depends on x only
        vxbf = [X(bz * convolve_xi(vc[1] * f.values, kv)), -X(bz * convolve_xi(vc[0] * f.values, kv))]
        bf = X(bz * fd)
        tb1 = [a - b for a, b in zip(vxbf, _cross_z(vc, bf))]
        tb2 = _cross_z(vc, bf - bze * fed)
        tb3 = _cross_z([vc[0] - vdc[0], vc[1] - vdc[1]], bze * fed)
        parts["tb1"] = _div_xi(tb1, g)
        parts["tb2"] = _div_xi(tb2, g)
        parts["tb3"] = _div_xi(tb3, g)
        # whole commutator from its definition, independent of the split
        ef = [X(_bcast_x(e, d) * fd) for e in E]
        flux = [ef[k] + vxbf[k] - (_bcast_x(X(E[k]), d) + _cross_z(vdc, bze)[k]) * fed for k in range(2)]
        parts["total"] = _div_xi(flux, g)
        K = _tb11_kernel(g, delta, profile)
        parts["tb11"] = K[None] * X(bz * f.values)
        tb11 = mixed_norm(parts["tb11"], p, r, g)
    else:
        parts["tb1"] = parts["tb2"] = parts["tb3"] = zero
        ef = X(_bcast_x(em.ex, 1) * fd)
        parts["total"] = _div_xi([ef - _bcast_x(X(em.ex), 1) * fed], g)
    norm = lambda a: mixed_norm(a, p, r, g)
    fs = fs_commutator(f, eps, delta, p, route="direct", profile=profile).norm if with_fs else float("nan")
    rep = CommutatorReport(
        eps=float(eps),
        delta=float(delta),
        fs_norm=fs,
        te_norm=norm(parts["te"]),
        tb1_norm=norm(parts["tb1"]),
        tb2_norm=norm(parts["tb2"]),
        tb3_norm=norm(parts["tb3"]),
        lorentz_norm=norm(parts["total"]),
        tb11_norm=tb11,
    )
    if keep_fields:
        rep.parts = parts
    return rep


# ---------------------------------------------------------------------------
# balanced path

@dataclass(frozen=True)
class BalancedPath:
    alpha: float
    beta: float
    eps: float
    delta: float
    eta_residual: float  # eps^(alpha-1) delta^(alpha+1)
    regime: str  # "i" if 2 alpha + beta - 1 < 0 else "ii"
    root_residual: float  # |eps^(a-1) d^2 - d - eps^(a+b)| / max term


def balanced_path(alpha: float, beta: float, eps: float) -> BalancedPath:
    """Positive root of ``eps^(a-1) d^2 - d - eps^(a+b) = 0``."""
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise ValueError("alpha and beta must lie in (0, 1)")
    if not eps > 0:
        raise ValueError("eps must be positive")
    a = eps ** (alpha - 1.0)
    c = eps ** (alpha + beta)
    z = eps ** (2.0 * alpha + beta - 1.0)
    delta = (1.0 + math.sqrt(1.0 + 4.0 * z)) / (2.0 * a)
    for _ in range(2):  # Newton polish; f' = 2 a d - 1 = sqrt(1 + 4z) > 0 at the root
        delta -= (a * delta * delta - delta - c) / (2.0 * a * delta - 1.0)
    terms = (a * delta * delta, delta, c)
    res = abs(terms[0] - terms[1] - terms[2]) / max(terms)
    regime = "i" if 2.0 * alpha + beta - 1.0 < 0 else "ii"
    return BalancedPath(alpha, beta, eps, delta, a * delta ** (alpha + 1.0), regime, res)


def eta_exponent(alpha: float, beta: float) -> float:
    """Small-eps decay exponent of the eta residual in regime (i)."""
    return (alpha * beta + beta + 3.0 * alpha - 1.0) / 2.0


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SlopeFit:
    quantity: str
    axis: str  # "eps" or "delta"
    fixed: float  # value of the other scale
    fit: LogLogFit


@dataclass
class ScalingReport:
    rows: list[CommutatorReport]
    fits: list[SlopeFit]

    QUANTITIES = ("fs_norm", "te_norm", "tb1_norm", "tb2_norm", "tb3_norm", "lorentz_norm")

    def table(self) -> list[tuple[float, ...]]:
        return [r.row() for r in self.rows]

    def slope(self, quantity: str, axis: str, fixed: Optional[float] = None) -> LogLogFit:
        cands = [s for s in self.fits if s.quantity == quantity and s.axis == axis]
        if fixed is not None:
            cands = [s for s in cands if math.isclose(s.fixed, fixed, rel_tol=1e-12)]
        if not cands:
            raise KeyError(f"no {axis}-fit for {quantity}")
        return cands[0].fit


Source = Union[tuple, RVMState, Any]  # (f, em), a state, or a Trajectory


def _snapshots(source) -> list[tuple[float, DistField, EMField]]:
    from .solver import Trajectory

    if isinstance(source, Trajectory):
        return [(s.t, s.f, s.em) for s in source.snapshots]
    if isinstance(source, RVMState):
        return [(source.t, source.f, source.em)]
    f, em = source
    return [(0.0, f, em)]


def _time_l1(times: np.ndarray, vals: np.ndarray) -> float:
    if len(times) == 1:
        return float(vals[0])
    return float(np.trapezoid(vals, times))


def commutator_norms(source, eps: float, delta: float, p: float = 2.0, r: float = 2.0,
                     profile: Profile = "bump") -> CommutatorReport:
    """Report for one (eps, delta); a trajectory gives L^1-in-time norms by
    the trapezoid rule over its snapshot times, a single state the
    instantaneous norms."""
    snaps = _snapshots(source)
    reps = [lorentz_commutator(f, em, eps, delta, p, r, profile) for _, f, em in snaps]
    t = np.array([s[0] for s in snaps])
    vals = {fl.name: _time_l1(t, np.array([getattr(rp, fl.name) for rp in reps]))
            for fl in fields(CommutatorReport) if fl.name not in ("eps", "delta", "parts")}
    return CommutatorReport(eps=float(eps), delta=float(delta), **vals)


def _check_scales(name: str, vals: Sequence[float]) -> list[float]:
    vals = [float(v) for v in vals]
    if not vals:
        raise ValueError(f"{name} list is empty")
    if any(b <= a for a, b in zip(vals, vals[1:])) and any(b >= a for a, b in zip(vals, vals[1:])):
        raise ValueError(f"{name} list must be monotone")
    return vals


def scaling_sweep(
    source,
    eps_list: Sequence[float],
    delta_list: Sequence[float],
    p: float = 2.0,
    r: float = 2.0,
    profile: Profile = "bump",
    workers: int = 1,
) -> ScalingReport:
    """Commutator norms on the (eps, delta) product grid plus log-log slopes
    of every norm along each axis at each fixed value of the other.

    Pairs are independent; with ``workers > 1`` they run on a thread pool and
    the rows are assembled in sorted (eps, delta) order, so the result does
    not depend on the worker count.
    """
    eps_list = _check_scales("eps", eps_list)
    delta_list = _check_scales("delta", delta_list)
    g = _snapshots(source)[0][1].grid
    for e in eps_list:  # fail early on unresolvable scales
        x_kernel(g, e, profile)
    for dl in delta_list:
        xi_kernel(g, dl, profile)
    pairs = sorted((e, dl) for e in eps_list for dl in delta_list)
    job = lambda pr: commutator_norms(source, pr[0], pr[1], p, r, profile)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(job, pairs))
    else:
        rows = [job(pr) for pr in pairs]
    return ScalingReport(rows, _axis_fits(rows))


def _axis_fits(rows: Sequence[CommutatorReport]) -> list[SlopeFit]:
    fits = []
    eps_vals = sorted({rw.eps for rw in rows})
    delta_vals = sorted({rw.delta for rw in rows})
    for q in ScalingReport.QUANTITIES:
        for e in eps_vals:
            sel = [rw for rw in rows if rw.eps == e]
            if len(sel) > 1:
                fits.append(SlopeFit(q, "delta", e, loglog_fit([s.delta for s in sel], [getattr(s, q) for s in sel])))
        for dl in delta_vals:
            sel = [rw for rw in rows if rw.delta == dl]
            if len(sel) > 1:
                fits.append(SlopeFit(q, "eps", dl, loglog_fit([s.eps for s in sel], [getattr(s, q) for s in sel])))
    return fits


def ensemble_sweep(
    sources: Sequence,
    eps_list: Sequence[float],
    delta_list: Sequence[float],
    p: float = 2.0,
    r: float = 2.0,
    profile: Profile = "bump",
    workers: int = 1,
) -> ScalingReport:
    """:func:`scaling_sweep` over several realisations; each norm is the
    arithmetic mean over sources (in source order) and the slopes are fitted
    to those means. A single realisation of a rough field can sit well off the
    power law over a short range; the mean is far steadier."""
    if not sources:
        raise ValueError("need at least one source")
    reports = [scaling_sweep(src, eps_list, delta_list, p, r, profile, workers) for src in sources]
    names = [fl.name for fl in fields(CommutatorReport) if fl.name not in ("eps", "delta", "parts")]
    rows = []
    for i, base in enumerate(reports[0].rows):
        means = {n: float(np.mean([rep.rows[i].__dict__[n] for rep in reports])) for n in names}
        rows.append(CommutatorReport(eps=base.eps, delta=base.delta, **means))
    return ScalingReport(rows, _axis_fits(rows))


def fs_bound_constant(report: ScalingReport, alpha: float) -> np.ndarray:
    """``fs_norm / (delta^(a+1) eps^(a-1))`` per row: the measured C_fs."""
    return np.array([rw.fs_norm / (rw.delta ** (alpha + 1.0) * rw.eps ** (alpha - 1.0)) for rw in report.rows])
