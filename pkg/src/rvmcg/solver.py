"""Strang-split semi-Lagrangian solver for the 1D1V / 1D2V relativistic
Vlasov-Maxwell system on a periodic x interval.

One step of length dt is

    X(dt/2)  M(dt/2)  P(dt)  M(dt/2)  X(dt/2)

X: free streaming ``f(x, xi) <- f(x - v_x(xi) dt/2, xi)``. The Ampere update
   of Ex driven by the streaming current is integrated exactly alongside it,
   which keeps the discrete Gauss law ``d_x Ex = rho - <rho>`` intact.
M: transverse Maxwell (Ey, Bz) with the current jy frozen, solved exactly
   along the characteristics ``Ey +- Bz`` in Fourier space.
P: momentum advection along the frozen Lorentz force, Boris style:
   electric half kick, magnetic rotation by ``dt Bz / gamma`` (gamma is
   invariant under the rotation), electric half kick.

A uniform neutralising background is implied by the zero-mean Gauss law.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
from scipy import fft as sfft, ndimage

from .grid import (
    DistField,
    EMField,
    PhaseGrid,
    RVMState,
    boundary_max,
    current,
    density,
    lp_norm,
    mass,
    spectral_dx,
    total_energy,
    velocity_mesh,
)
from .kinematics import gamma

log = logging.getLogger(__name__)

PRESETS = ("uniform_equilibrium", "landau_perturbation", "weibel_anisotropy", "free_streaming_test")


# Landau benchmark used by the conservation checks. A cold, tight momentum box
# keeps the filamentation tail of v(xi) = xi/gamma resolved on 64^2 nodes over
# 500 steps, so f stays below 1e-12 on the cutoff and never dips negative.
LANDAU_BENCHMARK = {
    "grid": {"nx": 64, "lx": 4.0 * np.pi, "nxi": (64, 64), "xi_max": 2.0},
    "params": {"amp": 0.01, "mode": 1, "theta": 0.25},
    "steps": 500,
}


class SolverError(FloatingPointError):
    pass


@dataclass
class SolverConfig:
    dt: float
    n_steps: int = 0
    interpolation: Literal["spectral", "cubic_spline"] = "spectral"
    field_free: bool = False  # freeze E = B = 0 (free streaming)
    limiter: bool = False  # clip f to its start-of-step range after every substep (breaks exact mass)
    order: int = 2  # Strang splitting

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")
        if self.interpolation not in ("spectral", "cubic_spline"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")

    @classmethod
    def default(cls, grid: PhaseGrid, **kw) -> "SolverConfig":
        return cls(dt=0.1 * grid.dx, **kw)


@dataclass
class Trajectory:
    snapshots: list[RVMState] = field(default_factory=list)
    series: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        t = [s.t for s in self.snapshots]
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def __len__(self) -> int:
        return len(self.snapshots)


# ---------------------------------------------------------------------------
# initial data

def maxwellian(grid: PhaseGrid, theta=1.0, drift=0.0) -> np.ndarray:
    """Gaussian in momentum normalised on the continuum, shape ``nxi``."""
    xi = grid.xi_mesh()
    d = grid.dxi_dims
    theta = np.broadcast_to(np.asarray(theta, float), (d,))
    drift = np.broadcast_to(np.asarray(drift, float), (d,))
    arg = np.sum(((xi - drift) / theta) ** 2, axis=-1)
    return np.exp(-0.5 * arg) / np.prod(np.sqrt(2 * np.pi) * theta)


def solve_gauss(rho: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """Zero-mean Ex with ``d_x Ex = rho - mean(rho)`` (spectral)."""
    n = grid.nx
    rh = sfft.rfft(rho)
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=grid.dx)
    eh = np.zeros_like(rh)
    eh[1:] = rh[1:] / (1j * k[1:])
    if n % 2 == 0:
        eh[-1] = 0.0
    return sfft.irfft(eh, n=n)


def gauss_residual(state: RVMState) -> float:
    rho = density(state.f)
    res = spectral_dx(state.em.ex, state.grid) - (rho - rho.mean())
    return float(np.abs(res).max())


def initialize(preset: str, grid: PhaseGrid, params: Optional[dict] = None) -> RVMState:
    """Build an initial state that satisfies the discrete Gauss law.

    Parameters (all optional): ``theta`` thermal momentum, ``amp``
    perturbation amplitude, ``mode`` x mode number, ``drift`` mean momentum,
    ``anisotropy`` (weibel: theta_y / theta_x), ``b_amp`` (weibel seed).
    """
    p = dict(params or {})
    theta = p.get("theta", 1.0)
    amp = p.get("amp", 0.0 if preset == "uniform_equilibrium" else 0.01)
    mode = p.get("mode", 1)
    k = 2 * np.pi * mode / grid.lx
    x = grid.x
    full = grid.dxi_dims == 2
    xshape = (grid.nx,) + (1,) * grid.dxi_dims
    if preset == "uniform_equilibrium":
        f = np.broadcast_to(maxwellian(grid, theta), grid.shape).copy()
        em = EMField.zeros(grid.nx, full)
    elif preset == "landau_perturbation":
        prof = (1.0 + amp * np.cos(k * x)).reshape(xshape)
        f = prof * maxwellian(grid, theta)
        em = EMField.zeros(grid.nx, full)
    elif preset == "weibel_anisotropy":
        if not full:
            raise ValueError("weibel_anisotropy needs two momentum dimensions")
        aniso = p.get("anisotropy", 4.0)
        f = np.broadcast_to(maxwellian(grid, (theta, theta * aniso)), grid.shape).copy()
        em = EMField.zeros(grid.nx, True)
        em.bz = p.get("b_amp", 1e-3) * np.cos(k * x)
    elif preset == "free_streaming_test":
        drift = p.get("drift", 0.0)
        prof = (1.0 + amp * np.cos(k * x) + 0.5 * amp * np.sin(2 * k * x)).reshape(xshape)
        f = prof * maxwellian(grid, theta, drift)
        em = EMField.zeros(grid.nx, full)
    else:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    fd = DistField(grid, f)
    em.ex = solve_gauss(density(fd), grid)
    return RVMState(0.0, fd, em)


# ---------------------------------------------------------------------------
# substeps

def _shift_phase(grid: PhaseGrid, disp: np.ndarray) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.rfftfreq(grid.nx, d=grid.dx)
    return np.exp(-1j * k.reshape((-1,) + (1,) * disp.ndim) * disp[None])


@lru_cache(maxsize=8)
def _stream_phase(grid: PhaseGrid, tau: float) -> np.ndarray:
    ph = _shift_phase(grid, velocity_mesh(grid)[..., 0] * tau)
    ph.flags.writeable = False
    return ph


def shift_x(values: np.ndarray, grid: PhaseGrid, disp: np.ndarray, method: str = "spectral") -> np.ndarray:
    """``f(x, xi) <- f(x - disp(xi), xi)`` periodically in x."""
    if method == "spectral":
        fh = sfft.rfft(values, axis=0)
        return sfft.irfft(fh * _shift_phase(grid, disp), n=grid.nx, axis=0)
    idx = np.indices(values.shape, dtype=float)
    idx[0] -= disp[None] / grid.dx
    return ndimage.map_coordinates(values, idx, order=3, mode="grid-wrap")


def _xi_index(grid: PhaseGrid, xi: np.ndarray, k: int) -> np.ndarray:
    return xi / grid.dxi[k] + (grid.nxi[k] - 1) / 2.0


def kick(values: np.ndarray, grid: PhaseGrid, force: np.ndarray, tau: float, method: str = "spectral") -> np.ndarray:
    """``f(x, xi) <- f(x, xi - F(x) tau)`` for an x-dependent, xi-uniform force.

    ``force`` has shape ``(nx, d)``. The spectral variant treats the momentum
    box as periodic; f is negligible at its edges by construction.
    """
    d = grid.dxi_dims
    disp = force * tau
    if method == "spectral":
        axes = tuple(range(1, 1 + d))
        fh = sfft.rfftn(values, axes=axes)
        ph = np.ones((), dtype=complex)
        for a in range(d):
            n = grid.nxi[a]
            freq = np.fft.rfftfreq if a == d - 1 else np.fft.fftfreq
            kk = 2.0 * np.pi * freq(n, d=grid.dxi[a])
            kshape = [1] * (1 + d)
            kshape[1 + a] = kk.size
            arg = kk.reshape(kshape) * disp[:, a].reshape([-1] + [1] * d)
            axis_ph = np.exp(-1j * arg)
            if freq is np.fft.fftfreq and n % 2 == 0:
                # the Nyquist mode of a real signal must stay real
                nyq = [slice(None)] * (1 + d)
                nyq[1 + a] = n // 2
                axis_ph[tuple(nyq)] = np.cos(arg[tuple(nyq)])
            ph = ph * axis_ph
        return sfft.irfftn(fh * ph, s=grid.nxi, axes=axes)
    out = np.empty_like(values)
    for i in range(grid.nx):
        shift = disp[i] / np.asarray(grid.dxi)
        out[i] = ndimage.shift(values[i], shift, order=3, mode="constant", cval=0.0)
    return out


_MIN_ANGLE = 1e-15


def rotate(values: np.ndarray, grid: PhaseGrid, bz: np.ndarray, tau: float, limiter: bool = False) -> np.ndarray:
    """Exact magnetic rotation ``d xi/dt = v x Bz`` traced backward, cubic
    spline interpolation at the feet.

    The rotation preserves the momentum integral at every x, so each x row is
    rescaled afterwards to keep the charge density (and hence Gauss's law)
    exact. Rows whose angle is below roundoff are left untouched.
    """
    xi = grid.xi_mesh()
    g = gamma(xi)
    out = np.empty_like(values)
    lo, hi = values.min(), values.max()
    for i in range(grid.nx):
        if abs(bz[i] * tau) <= _MIN_ANGLE:
            out[i] = values[i]
            continue
        th = bz[i] * tau / g
        c, s = np.cos(th), np.sin(th)
        # foot = R(th) xi (counter-clockwise)
        fx = c * xi[..., 0] - s * xi[..., 1]
        fy = s * xi[..., 0] + c * xi[..., 1]
        coords = np.stack([_xi_index(grid, fx, 0), _xi_index(grid, fy, 1)])
        row = ndimage.map_coordinates(values[i], coords, order=3, mode="grid-constant", cval=0.0)
        before, after = values[i].sum(), row.sum()
        if after != 0.0:
            row *= before / after
        out[i] = row
    if limiter:
        np.clip(out, lo, hi, out=out)
    return out


def _maxwell_transverse(em: EMField, jy: np.ndarray, grid: PhaseGrid, tau: float) -> None:
    """Advance (Ey, Bz) by tau with frozen jy, exactly, in place.

    ``u = Ey + Bz`` moves right and ``w = Ey - Bz`` moves left, both with
    source ``-jy``.
    """
    n = grid.nx
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=grid.dx)
    uh = sfft.rfft(em.ey_ + em.bz_)
    wh = sfft.rfft(em.ey_ - em.bz_)
    jh = sfft.rfft(jy)
    src = np.empty_like(jh)
    src[0] = jh[0] * tau
    src[1:] = jh[1:] * (1.0 - np.exp(-1j * k[1:] * tau)) / (1j * k[1:])
    uh = uh * np.exp(-1j * k * tau) - src
    wh = wh * np.exp(1j * k * tau) - _left_src(jh, k, tau)
    u = sfft.irfft(uh, n=n)
    w = sfft.irfft(wh, n=n)
    em.ey = 0.5 * (u + w)
    em.bz = 0.5 * (u - w)


def _left_src(jh: np.ndarray, k: np.ndarray, tau: float) -> np.ndarray:
    src = np.empty_like(jh)
    src[0] = jh[0] * tau
    src[1:] = jh[1:] * (np.exp(1j * k[1:] * tau) - 1.0) / (1j * k[1:])
    return src


def _stream(state: RVMState, tau: float, cfg: SolverConfig) -> None:
    g = state.grid
    f_old = state.f.values
    if cfg.interpolation == "spectral":
        fh = sfft.rfft(f_old, axis=0)
        f_new = sfft.irfft(fh * _stream_phase(g, tau), n=g.nx, axis=0)
    else:
        f_new = shift_x(f_old, g, velocity_mesh(g)[..., 0] * tau, cfg.interpolation)
    if not cfg.field_free:
        rho_old = density(state.f)
        jx_mean = current(state.f)[:, 0].mean()
        state.f = state.f.with_values(f_new)
        rho_new = density(state.f)
        state.em.ex = state.em.ex + solve_gauss(rho_new - rho_old, g) - jx_mean * tau
    else:
        state.f = state.f.with_values(f_new)


def _momentum(state: RVMState, tau: float, cfg: SolverConfig) -> None:
    g = state.grid
    em = state.em
    if g.dxi_dims == 1:
        force = em.ex[:, None]
    else:
        force = np.stack([em.ex, em.ey_], axis=-1)
    f = state.f.values
    f = kick(f, g, force, 0.5 * tau, cfg.interpolation)
    if g.dxi_dims == 2 and np.abs(em.bz_).max() * tau > _MIN_ANGLE:
        f = rotate(f, g, em.bz_, tau, cfg.limiter)
    f = kick(f, g, force, 0.5 * tau, cfg.interpolation)
    state.f = state.f.with_values(f)


def step(state: RVMState, cfg: SolverConfig) -> RVMState:
    """Advance one Strang step of length ``cfg.dt`` and return the new state."""
    s = state.copy()
    h = 0.5 * cfg.dt
    lo, hi = float(state.f.values.min()), float(state.f.values.max())

    def clip():
        # limiter: keep f inside the range it had at the start of the step
        if cfg.limiter:
            s.f = s.f.with_values(np.clip(s.f.values, lo, hi))

    _stream(s, h, cfg)
    clip()
    if not cfg.field_free:
        if s.grid.dxi_dims == 2:
            _maxwell_transverse(s.em, current(s.f)[:, 1], s.grid, h)
        _momentum(s, cfg.dt, cfg)
        clip()
        if s.grid.dxi_dims == 2:
            _maxwell_transverse(s.em, current(s.f)[:, 1], s.grid, h)
    _stream(s, h, cfg)
    clip()
    s.t = state.t + cfg.dt
    if not (np.all(np.isfinite(s.f.values)) and np.all(np.isfinite(s.em.ex))):
        raise SolverError(f"non-finite values after step to t={s.t:.6g}")
    return s


def _record(series: dict, state: RVMState) -> None:
    e = total_energy(state)
    for key, val in (
        ("t", state.t),
        ("mass", mass(state.f)),
        ("l2", lp_norm(state.f, 2)),
        ("total", e.total),
        ("gauss", gauss_residual(state)),
        ("boundary", boundary_max(state.f)),
    ):
        series.setdefault(key, []).append(float(val))


def run(state: RVMState, cfg: SolverConfig, stride: int = 1) -> Trajectory:
    """Iterate :func:`step`, keeping a snapshot every ``stride`` steps and a
    diagnostics row every step."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    g = state.grid
    cfl = cfg.dt / g.dx
    if cfl > 1.0:
        log.warning("dt*max|v|/dx = %.3g > 1 (semi-Lagrangian, accuracy only)", cfl)
    traj = Trajectory([state.copy()])
    _record(traj.series, state)
    s = state
    for n in range(1, cfg.n_steps + 1):
        s = step(s, cfg)
        _record(traj.series, s)
        if n % stride == 0:
            traj.snapshots.append(s.copy())
    bmax = max(traj.series["boundary"])
    fmax = np.abs(state.f.values).max()
    if fmax > 0 and bmax > 1e-12 * fmax:
        log.warning("f on the momentum cutoff reached %.3g (relative %.3g)", bmax, bmax / fmax)
    return traj
