"""Fields with prescribed Hölder/Besov exponents.

1D building blocks are periodic on their interval. Phase-space fields are
tensor products of independent 1D rough factors (one per axis, all sharing
the exponent ``a``) times a smooth compactly supported momentum window, so the
field vanishes near the momentum cutoff and stays nonnegative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .grid import DistField, EMField, PhaseGrid

Kind = Literal["weierstrass", "random_fourier", "step", "gaussian_bump"]
KINDS = ("weierstrass", "random_fourier", "step", "gaussian_bump")

# Threshold exponents of the Onsager-type condition a*b + b + 3a - 1 > 0.
BETA_STAR = 6.0 / (13.0 + math.sqrt(142.0))
ALPHA_CRIT = (1.0 - BETA_STAR) / (3.0 + BETA_STAR)


class NyquistError(ValueError):
    """Requested modes are not representable on the grid."""


def onsager_condition(alpha: float, beta: float) -> float:
    return alpha * beta + beta + 3.0 * alpha - 1.0


@dataclass(frozen=True)
class SynthSpec:
    exponent: float
    kind: Kind = "weierstrass"
    seed: int = 0
    amplitude: float = 1.0
    axes: tuple[str, ...] = ("x", "xi")
    n_modes: Optional[int] = None  # weierstrass: octaves; random_fourier: highest mode

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; choose from {KINDS}")
        if self.kind in ("weierstrass", "random_fourier") and not 0.0 < self.exponent < 1.0:
            raise ValueError("exponent must lie in (0, 1)")
        for ax in self.axes:
            if ax not in ("x", "xi"):
                raise ValueError(f"axes entries must be 'x' or 'xi', got {ax!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(n)]


def weierstrass(n: int, exponent: float, rng: np.random.Generator, octaves: Optional[int] = None) -> np.ndarray:
    """``sum_k 2^{-k a} cos(2^k 2 pi s + phi_k)`` at ``s = j/n``, phases from ``rng``."""
    if octaves is None:  # highest octave strictly below Nyquist
        octaves = max(int(math.ceil(math.log2(n / 2))) - 1, 0)
    if 2**octaves >= n / 2 and octaves > 0:
        raise NyquistError(f"octave {octaves} (mode {2**octaves}) reaches Nyquist for n={n}")
    s = np.arange(n) / n
    phases = rng.uniform(0.0, 2.0 * np.pi, octaves + 1)
    out = np.zeros(n)
    for k in range(octaves + 1):
        out += 2.0 ** (-k * exponent) * np.cos(2.0 ** k * 2.0 * np.pi * s + phases[k])
    return out


def random_fourier(shape: Sequence[int], exponent: float, rng: np.random.Generator, n_max: Optional[int] = None) -> np.ndarray:
    """Real periodic field with ``|c_n| = (1+|n|)^{-(a + d/2)}`` and uniform
    random phases, all modes strictly below Nyquist."""
    shape = tuple(int(s) for s in shape)
    d = len(shape)
    freqs = np.meshgrid(*[np.fft.fftfreq(s, 1.0 / s) for s in shape], indexing="ij")
    knorm = np.sqrt(sum(k * k for k in freqs))
    limit = min(s // 2 for s in shape)
    if n_max is not None:
        if n_max >= limit:
            raise NyquistError(f"mode {n_max} reaches Nyquist ({limit})")
        limit = n_max + 1
    amp = (1.0 + knorm) ** (-(exponent + d / 2.0))
    keep = (knorm > 0) & np.all([np.abs(k) < limit for k in freqs], axis=0) & (knorm < limit)
    phi = rng.uniform(0.0, 2.0 * np.pi, shape)
    # phi(k) - phi(-k) is again uniform mod 2 pi and odd in k, so the
    # spectrum is Hermitian and every mode keeps its exact modulus
    mirror = phi[tuple(np.s_[::-1] for _ in shape)]
    mirror = np.roll(mirror, 1, axis=tuple(range(d)))
    coef = np.where(keep, amp * np.exp(1j * (phi - mirror)), 0.0)
    return np.real(np.fft.ifftn(coef)) * np.prod(shape)


def step(n: int) -> np.ndarray:
    """Indicator of the first half period."""
    return (np.arange(n) < n / 2).astype(float)


def gaussian_bump(n: int, width: float = 1.0 / 16.0) -> np.ndarray:
    s = np.arange(n) / n
    return np.exp(-0.5 * ((s - 0.5) / width) ** 2)


def signal_1d(kind: str, n: int, exponent: float, rng: np.random.Generator, n_modes: Optional[int] = None) -> np.ndarray:
    """One periodic 1D factor, scaled to ``max |.| = 1`` for the rough kinds."""
    if kind == "weierstrass":
        s = weierstrass(n, exponent, rng, n_modes)
    elif kind == "random_fourier":
        s = random_fourier((n,), exponent, rng, n_modes)
    elif kind == "step":
        return step(n)
    elif kind == "gaussian_bump":
        return gaussian_bump(n)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    m = np.abs(s).max()
    return s / m if m > 0 else s


def momentum_window(grid: PhaseGrid, support: float = 0.8) -> np.ndarray:
    """Smooth radial bump equal to 1 at the origin and vanishing for
    ``|xi| >= support * xi_max``; shape ``nxi``."""
    xi = grid.xi_mesh()
    r = np.sqrt(np.sum(xi * xi, axis=-1)) / (support * grid.xi_max)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def generate(spec: SynthSpec, grid: PhaseGrid | int) -> DistField | np.ndarray:
    """Realise ``spec``.

    With an integer ``grid`` a 1D periodic array of that length is returned.
    With a :class:`PhaseGrid` the result is a nonnegative phase-space field
    ``A * prod_k (1 + s_k/2) * window(xi)`` where ``s_k`` ranges over the
    requested axes (the momentum factor is applied on every momentum axis).
    """
    if isinstance(grid, (int, np.integer)):
        (rng,) = _rngs(spec.seed, 1)
        return spec.amplitude * signal_1d(spec.kind, int(grid), spec.exponent, rng, spec.n_modes)
    g = grid
    rngs = _rngs(spec.seed, 1 + g.dxi_dims)
    f = np.ones(g.shape)
    if "x" in spec.axes:
        sx = signal_1d(spec.kind, g.nx, spec.exponent, rngs[0], spec.n_modes)
        f = f * (1.0 + 0.5 * sx).reshape((g.nx,) + (1,) * g.dxi_dims)
    if "xi" in spec.axes:
        for k in range(g.dxi_dims):
            sk = signal_1d(spec.kind, g.nxi[k], spec.exponent, rngs[1 + k], spec.n_modes)
            shape = [1] * (1 + g.dxi_dims)
            shape[1 + k] = g.nxi[k]
            f = f * (1.0 + 0.5 * sk).reshape(shape)
    f = spec.amplitude * f * momentum_window(g)[None]
    return DistField(g, f)


def field_x(kind: str, exponent: float, n: int, seed: int, amplitude: float = 1.0, n_modes: Optional[int] = None) -> np.ndarray:
    """Zero-mean 1D rough field for E or B components."""
    (rng,) = _rngs(seed, 1)
    s = signal_1d(kind, n, exponent, rng, n_modes)
    return amplitude * (s - s.mean())


@dataclass(frozen=True)
class OnsagerSample:
    f: DistField
    em: EMField
    condition: float
    conserving: bool  # condition > 0


def onsager_ensemble(
    alpha: float,
    beta: float,
    grid: PhaseGrid,
    seed: int = 0,
    kind: Kind = "weierstrass",
    field_amplitude: float = 1.0,
) -> OnsagerSample:
    """f with exponent alpha (nonnegative), E and B with exponent beta."""
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise ValueError("alpha and beta must lie in (0, 1)")
    ss = np.random.SeedSequence(int(seed)).spawn(4)
    fseed = int(ss[0].generate_state(1, np.uint64)[0])
    f = generate(SynthSpec(alpha, kind, fseed), grid)
    seeds = [int(s.generate_state(1, np.uint64)[0]) for s in ss[1:]]
    ex = field_x(kind, beta, grid.nx, seeds[0], field_amplitude)
    if grid.dxi_dims == 2:
        em = EMField(ex, field_x(kind, beta, grid.nx, seeds[1], field_amplitude),
                     field_x(kind, beta, grid.nx, seeds[2], field_amplitude))
    else:
        em = EMField(ex)
    c = onsager_condition(alpha, beta)
    return OnsagerSample(f, em, c, bool(c > 0))
