"""Phase-space grid, state containers, moments, norms and integral functionals.

Layout
------
A distribution function on a :class:`PhaseGrid` is stored as a float64 array
of shape ``(nx, nxi_1)`` (1D1V) or ``(nx, nxi_1, nxi_2)`` (1D2V): x-major,
then xi_1, then xi_2. The x axis is periodic with nodes ``x_i = i*dx``. The
momentum axes are truncated at ``+-xi_max`` and sampled at cell centres, so
integrals over xi are midpoint sums and f is taken to vanish outside.

All reductions go through :func:`reduce_sum`, which reduces momentum axes
first and x last using numpy's pairwise summation on a fixed array shape.
No threading is involved, so results are bit-identical run to run.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .kinematics import gamma, velocity


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform periodic-in-x, truncated-in-xi discretisation."""

    nx: int
    lx: float
    nxi: tuple[int, ...]
    xi_max: float

    def __post_init__(self):
        nxi = tuple(int(n) for n in np.atleast_1d(self.nxi))
        object.__setattr__(self, "nxi", nxi)
        if self.nx < 1 or any(n < 1 for n in nxi):
            raise ValueError("grid sizes must be positive")
        if len(nxi) not in (1, 2):
            raise ValueError("only 1 or 2 momentum dimensions are supported")
        if self.lx <= 0 or self.xi_max <= 0:
            raise ValueError("lx and xi_max must be positive")

    @property
    def dxi_dims(self) -> int:
        return len(self.nxi)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nx, *self.nxi)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dxi(self) -> tuple[float, ...]:
        return tuple(2.0 * self.xi_max / n for n in self.nxi)

    @property
    def cell_volume(self) -> float:
        return self.dx * float(np.prod(self.dxi))

    @property
    def xi_volume(self) -> float:
        return float(np.prod(self.dxi))

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    def xi_axis(self, k: int = 0) -> np.ndarray:
        # (j - (n-1)/2) is an exact half-integer, so the nodes are exactly
        # antisymmetric about 0.
        n = self.nxi[k]
        return (np.arange(n) - (n - 1) / 2.0) * self.dxi[k]

    def xi_mesh(self) -> np.ndarray:
        """Momentum nodes, shape ``(*nxi, d)``."""
        axes = [self.xi_axis(k) for k in range(self.dxi_dims)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    @property
    def kx(self) -> np.ndarray:
        """Angular wavenumbers of the x axis in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx)

    def with_xi_dims(self, d: int) -> "PhaseGrid":
        return replace(self, nxi=(self.nxi[0],) * d)


@dataclass
class DistField:
    """A (possibly signed) phase-space field on ``grid``."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")

    def with_values(self, values) -> "DistField":
        return DistField(self.grid, values)

    def copy(self) -> "DistField":
        return DistField(self.grid, self.values.copy())


@dataclass
class EMField:
    """Electromagnetic field on the x grid. ``ey``/``bz`` may be absent (1D1V)."""

    ex: np.ndarray
    ey: Optional[np.ndarray] = None
    bz: Optional[np.ndarray] = None

    def __post_init__(self):
        self.ex = np.asarray(self.ex, dtype=float)
        n = self.ex.shape
        for name in ("ey", "bz"):
            a = getattr(self, name)
            if a is not None:
                a = np.asarray(a, dtype=float)
                if a.shape != n:
                    raise ValueError(f"{name} shape {a.shape} != ex shape {n}")
                setattr(self, name, a)

    @classmethod
    def zeros(cls, nx: int, full: bool = True) -> "EMField":
        z = np.zeros(nx)
        return cls(z.copy(), z.copy() if full else None, z.copy() if full else None)

    @property
    def ey_(self) -> np.ndarray:
        return self.ey if self.ey is not None else np.zeros_like(self.ex)

    @property
    def bz_(self) -> np.ndarray:
        return self.bz if self.bz is not None else np.zeros_like(self.ex)

    def copy(self) -> "EMField":
        return EMField(
            self.ex.copy(),
            None if self.ey is None else self.ey.copy(),
            None if self.bz is None else self.bz.copy(),
        )


@dataclass
class RVMState:
    t: float
    f: DistField
    em: EMField

    def __post_init__(self):
        if self.em.ex.shape != (self.f.grid.nx,):
            raise ValueError("EM field and distribution function disagree on nx")

    @property
    def grid(self) -> PhaseGrid:
        return self.f.grid

    def copy(self) -> "RVMState":
        return RVMState(self.t, self.f.copy(), self.em.copy())


@dataclass(frozen=True)
class EntropyFn:
    """An entropy H with derivative dH.

    ``in_class`` records membership in the superlinear, nondecreasing C^1
    class used for the global conservation statements; ``nonneg_only`` marks
    functions only defined for f >= 0.
    """

    name: str
    h: Callable[[np.ndarray], np.ndarray]
    dh: Callable[[np.ndarray], np.ndarray]
    in_class: bool = True
    nonneg_only: bool = False


def _h_square(f):
    return f * f


def _dh_square(f):
    return 2.0 * f


def _h_xlogx(f):
    return (1.0 + f) * np.log1p(f) - f


def _dh_xlogx(f):
    return np.log1p(f)


SQUARE = EntropyFn("entropy_sq", _h_square, _dh_square)
XLOGX = EntropyFn("entropy_xlogx", _h_xlogx, _dh_xlogx, nonneg_only=True)
BUILTIN_ENTROPIES = {SQUARE.name: SQUARE, XLOGX.name: XLOGX}


# ---------------------------------------------------------------------------
# reductions

def reduce_sum(a: np.ndarray, n_lead: int = 1) -> np.ndarray:
    """Sum over all axes after the first ``n_lead`` ones, innermost first.

    The reduction order is fixed by the array shape alone.
    """
    a = np.asarray(a)
    for ax in range(a.ndim - 1, n_lead - 1, -1):
        a = np.add.reduce(a, axis=ax)
    return a


def _phase_integral(values: np.ndarray, grid: PhaseGrid) -> float:
    per_x = reduce_sum(values, n_lead=1) * grid.xi_volume
    return float(np.add.reduce(per_x) * grid.dx)


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, DistField) else np.asarray(f, dtype=float)


# ---------------------------------------------------------------------------
# moments

@lru_cache(maxsize=16)
def velocity_mesh(grid: PhaseGrid) -> np.ndarray:
    """Read-only ``v(xi)`` on the momentum nodes, shape ``(*nxi, d)``."""
    v = velocity(grid.xi_mesh())
    v.flags.writeable = False
    return v


@lru_cache(maxsize=16)
def gamma_mesh(grid: PhaseGrid) -> np.ndarray:
    w = gamma(grid.xi_mesh())
    w.flags.writeable = False
    return w


def density(f: DistField) -> np.ndarray:
    """Charge density ``rho(x) = int f dxi`` (midpoint rule)."""
    return reduce_sum(f.values, 1) * f.grid.xi_volume


def current(f: DistField) -> np.ndarray:
    """Current density ``j(x) = int v f dxi``, shape ``(nx, d)``."""
    g = f.grid
    v = velocity_mesh(g)
    out = np.empty((g.nx, g.dxi_dims))
    for k in range(g.dxi_dims):
        out[:, k] = reduce_sum(f.values * v[..., k], 1) * g.xi_volume
    return out


def kinetic_energy_density(f: DistField, rest_mass: bool = True) -> np.ndarray:
    w = gamma_mesh(f.grid)
    if not rest_mass:
        w = w - 1.0
    return reduce_sum(f.values * w, 1) * f.grid.xi_volume


def energy_flux_kinetic(f: DistField) -> np.ndarray:
    """x-component of ``int gamma v f dxi = int xi f dxi``."""
    xi1 = f.grid.xi_mesh()[..., 0]
    return reduce_sum(f.values * xi1, 1) * f.grid.xi_volume


# ---------------------------------------------------------------------------
# functionals

@dataclass(frozen=True)
class EnergyBudget:
    kinetic: float
    field: float
    total: float
    kinetic_rel: float  # (gamma - 1) weight
    total_rel: float


def field_energy(em: EMField, dx: float) -> float:
    e2 = em.ex**2 + em.ey_**2 + em.bz_**2
    return float(0.5 * np.add.reduce(e2) * dx)


def total_energy(state: RVMState) -> EnergyBudget:
    g = state.grid
    kin = float(np.add.reduce(kinetic_energy_density(state.f)) * g.dx)
    kin_rel = float(np.add.reduce(kinetic_energy_density(state.f, rest_mass=False)) * g.dx)
    fe = field_energy(state.em, g.dx)
    return EnergyBudget(kin, fe, kin + fe, kin_rel, kin_rel + fe)


def lp_norm(f, p: float, grid: Optional[PhaseGrid] = None) -> float:
    """Discrete L^p norm with cell-volume weights; ``p = inf`` gives max |f|."""
    if isinstance(f, DistField):
        grid = f.grid
    if grid is None:
        raise ValueError("a grid is needed for raw arrays")
    a = np.abs(_values(f))
    if p == np.inf:
        return float(a.max())
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 1:
        return _phase_integral(a, grid)
    return _phase_integral(a**p, grid) ** (1.0 / p)


def mixed_norm(f, p_xi: float, r_x: float, grid: Optional[PhaseGrid] = None) -> float:
    """``|| || f ||_{L^r_x} ||_{L^p_xi}``: inner norm over x, outer over xi."""
    if isinstance(f, DistField):
        grid = f.grid
    if grid is None:
        raise ValueError("a grid is needed for raw arrays")
    if p_xi < 1 or r_x < 1:
        raise ValueError("mixed_norm exponents must be >= 1")
    a = np.abs(_values(f))
    if r_x == np.inf:
        inner = a.max(axis=0)
    else:
        inner = (np.add.reduce(a**r_x, axis=0) * grid.dx) ** (1.0 / r_x)
    if p_xi == np.inf:
        return float(inner.max())
    flat = inner.reshape(-1)
    return float((np.add.reduce(flat**p_xi) * grid.xi_volume) ** (1.0 / p_xi))


NEGATIVE_ROUNDOFF = 1e-9  # undershoot relative to max|f| treated as zero; clipping it moves int H by O(tol^2)


def entropy_argument(f: DistField, H: EntropyFn) -> np.ndarray:
    """Values on which ``H`` is evaluated. Entropies restricted to ``f >= 0``
    get round-off undershoots clipped to zero; real negatives raise."""
    a = f.values
    if not H.nonneg_only:
        return a
    lo = float(a.min()) if a.size else 0.0
    if lo >= 0.0:
        return a
    if -lo > NEGATIVE_ROUNDOFF * float(np.abs(a).max()):
        raise ValueError(f"entropy {H.name} is only defined for f >= 0 (min {lo:.3g})")
    return np.maximum(a, 0.0)


def entropy_integral(f: DistField, H: EntropyFn) -> float:
    return _phase_integral(H.h(entropy_argument(f, H)), f.grid)


def mass(f: DistField) -> float:
    return _phase_integral(f.values, f.grid)


def momentum_total(state: RVMState) -> np.ndarray:
    """Particle momentum ``int int xi f`` plus field momentum ``int E x B``.

    In 1D2V, ``E x B = (Ey Bz, -Ex Bz)``.
    """
    g = state.grid
    xi = g.xi_mesh()
    p = np.array([_phase_integral(state.f.values * xi[..., k], g) for k in range(g.dxi_dims)])
    em = state.em
    if g.dxi_dims == 2:
        p[0] += float(np.add.reduce(em.ey_ * em.bz_) * g.dx)
        p[1] += float(np.add.reduce(-em.ex * em.bz_) * g.dx)
    return p


def boundary_max(f: DistField) -> float:
    """Largest |f| on the outermost momentum nodes (truncation monitor)."""
    a = np.abs(f.values)
    edges = [a[:, 0], a[:, -1]]
    if f.grid.dxi_dims == 2:
        edges += [a[:, :, 0], a[:, :, -1]]
    return float(max(e.max() for e in edges))


def spectral_dx(a: np.ndarray, grid: PhaseGrid, axis: int = 0) -> np.ndarray:
    """Spectral x-derivative of a real array along ``axis`` (periodic)."""
    n = grid.nx
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=grid.dx)
    if n % 2 == 0:
        k = k.copy()
        k[-1] = 0.0  # Nyquist mode has no odd part
    shape = [1] * np.ndim(a)
    shape[axis] = k.size
    ah = np.fft.rfft(a, axis=axis)
    return np.fft.irfft(1j * k.reshape(shape) * ah, n=n, axis=axis)
