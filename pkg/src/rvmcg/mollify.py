"""Friedrichs mollifiers on the grid and the phase-space coarse-graining operator.

Kernels are sampled from a radial profile on the grid lattice, restricted to
offsets with ``|z| < scale`` and renormalised so the discrete weights sum to
exactly one. The x axis is convolved periodically; momentum axes are
zero-extended. For two momentum dimensions the xi-kernel is a genuinely
radial 2D stencil, applied as one 2D convolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
from scipy import ndimage

from .grid import DistField, EMField, PhaseGrid, RVMState
from .kinematics import velocity

Profile = Literal["bump", "quartic"]


class UnderResolvedKernel(ValueError):
    """Raised when a mollifier scale is below two grid spacings or too wide."""


def _profile(r: np.ndarray, profile: str) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    ri = r[inside]
    if profile == "bump":
        out[inside] = np.exp(-1.0 / (1.0 - ri * ri))
    elif profile == "quartic":
        out[inside] = (1.0 - ri * ri) ** 2
    else:
        raise ValueError(f"unknown profile {profile!r}")
    return out


def _profile_deriv(r: np.ndarray, profile: str) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    ri = r[inside]
    if profile == "bump":
        s = 1.0 - ri * ri
        out[inside] = np.exp(-1.0 / s) * (-2.0 * ri / (s * s))
    elif profile == "quartic":
        out[inside] = -4.0 * ri * (1.0 - ri * ri)
    else:
        raise ValueError(f"unknown profile {profile!r}")
    return out


@dataclass(frozen=True)
class MollifierKernel:
    """Normalised, nonnegative, radially symmetric stencil.

    ``weights`` has shape ``(2m+1,)`` for d = 1 and ``(2m1+1, 2m2+1)`` for
    d = 2; ``offsets[k]`` holds the physical offsets along axis k.
    """

    d: int
    scale: float
    spacing: tuple[float, ...]
    profile: str
    weights: np.ndarray
    offsets: tuple[np.ndarray, ...]
    norm: float  # lattice sum of the raw profile times cell volume

    @property
    def half_width(self) -> tuple[int, ...]:
        return tuple((n - 1) // 2 for n in self.weights.shape)

    def offset_mesh(self) -> np.ndarray:
        """Offsets as an array of shape ``(*weights.shape, d)``."""
        return np.stack(np.meshgrid(*self.offsets, indexing="ij"), axis=-1)

    def moment(self, powers: Sequence[int], absolute: bool = False) -> float:
        z = self.offset_mesh()
        term = np.ones_like(self.weights)
        for k, pw in enumerate(powers):
            zk = np.abs(z[..., k]) if absolute else z[..., k]
            term = term * zk**pw
        return float(np.sum(self.weights * term))

    def gradient_weights(self) -> np.ndarray:
        """Analytic gradient of the scaled kernel at the stencil offsets,
        times the lattice cell volume (consistent with ``weights``).
        Shape ``(*weights.shape, d)``."""
        z = self.offset_mesh()
        r = np.sqrt(np.sum(z * z, axis=-1))
        dp = _profile_deriv(r / self.scale, self.profile) / self.scale
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(r[..., None] > 0, z / r[..., None], 0.0)
        cell = float(np.prod(self.spacing))
        return dp[..., None] * unit * cell / self.norm


def make_kernel(
    d: int,
    scale: float,
    spacing: float | Sequence[float],
    profile: Profile = "bump",
    domain_length: Optional[float | Sequence[float]] = None,
) -> MollifierKernel:
    """Sample ``rho(|z|/scale)`` on the lattice and renormalise to unit mass.

    Raises :class:`UnderResolvedKernel` if ``scale`` is below two grid
    spacings on any axis, or above half of ``domain_length``.
    """
    spacing = tuple(float(h) for h in np.broadcast_to(np.asarray(spacing, float), (d,)))
    if d not in (1, 2):
        raise ValueError("kernel dimension must be 1 or 2")
    for h in spacing:
        if scale < 2.0 * h * (1 - 1e-12):
            raise UnderResolvedKernel(f"scale {scale:g} below two grid spacings ({h:g})")
    if domain_length is not None:
        for L in np.broadcast_to(np.asarray(domain_length, float), (d,)):
            if scale > 0.5 * L:
                raise UnderResolvedKernel(f"scale {scale:g} exceeds half the domain ({L:g})")
    offsets = []
    for h in spacing:
        m = int(math.ceil(scale / h - 1e-12)) - 1
        offsets.append(np.arange(-m, m + 1) * h)
    z = np.stack(np.meshgrid(*offsets, indexing="ij"), axis=-1)
    r = np.sqrt(np.sum(z * z, axis=-1))
    raw = _profile(r / scale, profile)
    total = raw.sum()
    weights = raw / total
    norm = total * float(np.prod(spacing))
    return MollifierKernel(d, float(scale), spacing, profile, weights, tuple(offsets), float(norm))


def continuum_second_moment(profile: Profile = "bump", n: int = 200001) -> float:
    """``int rho(z) z^2 dz / int rho(z) dz`` for the unit 1D profile, by dense
    trapezoid quadrature."""
    z = np.linspace(-1.0, 1.0, n)
    w = _profile(np.abs(z), profile)
    return float(np.trapezoid(w * z * z, z) / np.trapezoid(w, z))


# ---------------------------------------------------------------------------
# application

def convolve_x(a: np.ndarray, kernel: MollifierKernel, axis: int = 0) -> np.ndarray:
    return ndimage.convolve1d(a, kernel.weights, axis=axis, mode="wrap")


def convolve_xi(a: np.ndarray, kernel: MollifierKernel) -> np.ndarray:
    """Zero-extended convolution over the trailing momentum axes of ``a``."""
    if kernel.d == 1:
        return ndimage.convolve1d(a, kernel.weights, axis=a.ndim - 1, mode="constant", cval=0.0)
    w = kernel.weights.reshape((1,) * (a.ndim - 2) + kernel.weights.shape)
    return ndimage.convolve(a, w, mode="constant", cval=0.0)


def x_kernel(grid: PhaseGrid, eps: float, profile: Profile = "bump") -> MollifierKernel:
    return make_kernel(1, eps, grid.dx, profile, domain_length=grid.lx)


def xi_kernel(grid: PhaseGrid, delta: float, profile: Profile = "bump") -> MollifierKernel:
    return make_kernel(grid.dxi_dims, delta, grid.dxi, profile, domain_length=2 * grid.xi_max)


def mollify(
    field: DistField,
    axes: Literal["x", "xi", "both"] = "both",
    eps: Optional[float] = None,
    delta: Optional[float] = None,
    profile: Profile = "bump",
) -> DistField:
    """Coarse-grain ``field`` in x at scale ``eps`` and/or in xi at ``delta``.

    The product kernel ``rho_eps(x) rho_delta(xi)`` is applied one axis group
    at a time (x first).
    """
    g = field.grid
    out = field.values
    if axes in ("x", "both"):
        if eps is None:
            raise ValueError("eps is required to mollify in x")
        out = convolve_x(out, x_kernel(g, eps, profile))
    if axes in ("xi", "both"):
        if delta is None:
            raise ValueError("delta is required to mollify in xi")
        out = convolve_xi(out, xi_kernel(g, delta, profile))
    if axes not in ("x", "xi", "both"):
        raise ValueError(f"axes must be 'x', 'xi' or 'both', got {axes!r}")
    return field.with_values(out)


def mollify_x(a: np.ndarray, grid: PhaseGrid, eps: float, profile: Profile = "bump") -> np.ndarray:
    """Periodic x-mollification of an array whose first axis is x."""
    return convolve_x(np.asarray(a, float), x_kernel(grid, eps, profile))


def mollify_em(em: EMField, grid: PhaseGrid, eps: float, profile: Profile = "bump") -> EMField:
    k = x_kernel(grid, eps, profile)
    return EMField(
        convolve_x(em.ex, k),
        None if em.ey is None else convolve_x(em.ey, k),
        None if em.bz is None else convolve_x(em.bz, k),
    )


def mollified_velocity(grid: PhaseGrid, delta: float, profile: Profile = "bump") -> np.ndarray:
    """``v^delta = rho_delta * v`` at the momentum nodes, shape ``(*nxi, d)``.

    v is analytic, so stencil points beyond the momentum cutoff are evaluated
    exactly rather than zero-extended.
    """
    k = xi_kernel(grid, delta, profile)
    xi = grid.xi_mesh()
    z = k.offset_mesh().reshape(-1, grid.dxi_dims)
    w = k.weights.reshape(-1)
    out = np.zeros_like(xi)
    for wm, zm in zip(w, z):
        if wm == 0.0:
            continue
        out += wm * velocity(xi - zm)
    return out


@dataclass(frozen=True)
class VelocityGap:
    delta: float
    gap: float  # max |v - v^delta| over the grid
    c_rho: float  # max_ij int rho(w)|w_i||w_j| for the unit-scale kernel
    bound: float  # 6 c_rho delta^2


def velocity_mollification_gap(delta: float, grid: PhaseGrid, profile: Profile = "bump") -> VelocityGap:
    k = xi_kernel(grid, delta, profile)
    d = grid.dxi_dims
    c = 0.0
    for i in range(d):
        for j in range(d):
            powers = [0] * d
            powers[i] += 1
            powers[j] += 1
            c = max(c, k.moment(powers, absolute=True))
    c_rho = c / delta**2
    v = velocity(grid.xi_mesh())
    vd = mollified_velocity(grid, delta, profile)
    gap = float(np.sqrt(np.sum((v - vd) ** 2, axis=-1)).max())
    return VelocityGap(delta, gap, c_rho, 6.0 * c_rho * delta**2)


def mollify_time(traj, eta: float, profile: Profile = "bump"):
    """Convolve a uniformly sampled trajectory in time.

    Only snapshots whose full stencil lies inside the run are returned.
    """
    from .solver import Trajectory

    snaps = traj.snapshots
    if len(snaps) < 2:
        raise ValueError("need at least two snapshots to mollify in time")
    times = np.array([s.t for s in snaps])
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("time mollification needs uniformly spaced snapshots")
    k = make_kernel(1, eta, dt[0])
    m = k.half_width[0]
    if len(snaps) < 2 * m + 1:
        raise ValueError(f"need at least {2 * m + 1} snapshots for eta={eta:g}")
    w = k.weights
    out = []
    for i in range(m, len(snaps) - m):
        f = np.zeros_like(snaps[i].f.values)
        ex = np.zeros_like(snaps[i].em.ex)
        ey = None if snaps[i].em.ey is None else np.zeros_like(ex)
        bz = None if snaps[i].em.bz is None else np.zeros_like(ex)
        for j, wj in enumerate(w):
            s = snaps[i - m + j]
            f += wj * s.f.values
            ex += wj * s.em.ex
            if ey is not None:
                ey += wj * s.em.ey_
            if bz is not None:
                bz += wj * s.em.bz_
        out.append(RVMState(snaps[i].t, snaps[i].f.with_values(f), EMField(ex, ey, bz)))
    return Trajectory(out)
