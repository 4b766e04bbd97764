"""Empirical fractional regularity from structure functions.

``S_p(h)`` is the cell-weighted L^p norm of ``f(. - z) - f`` averaged over
the axis-aligned lattice shifts with ``|z| = h``. Periodic axes wrap;
non-periodic (momentum) axes are zero-extended and the increment is measured
on the extended support, so shifting left or right gives the same value.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fitting import loglog_fit
from .grid import DistField

SATURATION = 0.95  # slopes at or above this are indistinguishable from Lipschitz


@dataclass(frozen=True)
class StructureFunction:
    p: float
    shifts: np.ndarray  # physical |z|
    values: np.ndarray
    axes: tuple[int, ...]
    spacing: tuple[float, ...]  # per array axis
    lengths: tuple[float, ...]  # domain length per array axis

    def rows(self) -> list[tuple[float, float]]:
        return [(float(h), float(s)) for h, s in zip(self.shifts, self.values)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("h", "S_p"))
            for h, s in self.rows():
                w.writerow((repr(h), repr(s)))


@dataclass(frozen=True)
class ExponentFit:
    alpha_hat: float  # slope capped at 1
    slope: float
    ci_halfwidth: float
    fit_range: tuple[float, float]
    r_squared: float
    n_points: int
    flagged: bool  # too few points / too short a range
    saturated: bool  # slope >= SATURATION: smooth at the resolved scales
    note: str = ""


def _layout(field, spacing, periodic):
    if isinstance(field, DistField):
        g = field.grid
        a = field.values
        spacing = (g.dx, *g.dxi) if spacing is None else tuple(spacing)
        periodic = (True,) + (False,) * g.dxi_dims if periodic is None else tuple(periodic)
    else:
        a = np.asarray(field, float)
        spacing = tuple(1.0 / n for n in a.shape) if spacing is None else tuple(
            np.broadcast_to(np.asarray(spacing, float), (a.ndim,)))
        periodic = (True,) * a.ndim if periodic is None else tuple(np.broadcast_to(periodic, (a.ndim,)))
    return a, tuple(float(s) for s in spacing), tuple(bool(q) for q in periodic)


def _increment_norm(a: np.ndarray, axis: int, n: int, periodic: bool, p: float, cell: float) -> float:
    if periodic:
        diff = np.roll(a, n, axis=axis) - a
    else:
        pad = [(0, 0)] * a.ndim
        pad[axis] = (n, n)
        ext = np.pad(a, pad)
        diff = np.roll(ext, n, axis=axis) - ext
    diff = np.abs(diff)
    if p == np.inf:
        return float(diff.max())
    return float((np.sum(diff**p) * cell) ** (1.0 / p))


def structure_function(
    field,
    p: float = 2.0,
    axes: Optional[Sequence[int]] = None,
    shifts: Optional[Sequence[float]] = None,
    spacing: Optional[Sequence[float]] = None,
    periodic: Optional[Sequence[bool]] = None,
) -> StructureFunction:
    """Shift-averaged increment norms.

    ``field`` is a :class:`DistField` (x periodic, momentum zero-extended) or
    an array (by default periodic with unit length per axis). ``shifts`` are
    physical magnitudes that must be whole multiples (>= 1) of the spacing
    of every axis in ``axes``; by default all multiples up to half the
    shortest axis.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    a, sp, per = _layout(field, spacing, periodic)
    axes = tuple(range(a.ndim)) if axes is None else tuple(int(ax) for ax in axes)
    lengths = tuple(n * h for n, h in zip(a.shape, sp))
    cell = float(np.prod(sp))
    hmin = max(sp[ax] for ax in axes)
    if shifts is None:
        top = min(a.shape[ax] * sp[ax] for ax in axes) / 2.0
        shifts = hmin * np.arange(1, int(math.floor(top / hmin + 1e-9)) + 1)
    shifts = np.asarray(shifts, float)
    vals = []
    for h in shifts:
        tot = 0.0
        for ax in axes:
            n = h / sp[ax]
            k = int(round(n))
            if k < 1 or abs(n - k) > 1e-6 * max(1.0, n):
                raise ValueError(f"shift {h:g} is not a whole number (>= 1) of cells {sp[ax]:g} on axis {ax}")
            tot += _increment_norm(a, ax, k, per[ax], p, cell)
        vals.append(tot / len(axes))
    return StructureFunction(float(p), shifts, np.asarray(vals), axes, sp, lengths)


def default_window(sf: StructureFunction) -> tuple[float, float]:
    """Fit window ``[4 h_min, L/8]`` along the analysed axes."""
    h = max(sf.spacing[ax] for ax in sf.axes)
    L = min(sf.lengths[ax] for ax in sf.axes)
    return 4.0 * h, L / 8.0


def exponent_fit(sf: StructureFunction, fit_range: Optional[tuple[float, float]] = None) -> ExponentFit:
    lo, hi = default_window(sf) if fit_range is None else fit_range
    if not (sf.shifts.min() - 1e-12 <= lo < hi <= sf.shifts.max() + 1e-12):
        raise ValueError(f"fit range [{lo:g}, {hi:g}] outside the available shifts")
    sel = (sf.shifts >= lo * (1 - 1e-9)) & (sf.shifts <= hi * (1 + 1e-9))
    if sel.sum() < 2:
        raise ValueError("fewer than two shifts inside the fit range")
    fit = loglog_fit(sf.shifts[sel], sf.values[sel])
    sat = bool(np.isfinite(fit.slope) and fit.slope >= SATURATION)
    note = fit.reason
    if sat:
        note = (note + "; " if note else "") + "saturated: smooth at resolved scales"
    return ExponentFit(
        alpha_hat=float(min(fit.slope, 1.0)) if np.isfinite(fit.slope) else float("nan"),
        slope=fit.slope,
        ci_halfwidth=fit.ci_halfwidth,
        fit_range=(float(lo), float(hi)),
        r_squared=fit.r_squared,
        n_points=fit.n_points,
        flagged=fit.flagged,
        saturated=sat,
        note=note,
    )


def besov_modulus(
    field,
    alpha: float,
    p: float = 2.0,
    h_max: Optional[float] = None,
    axes: Optional[Sequence[int]] = None,
    spacing: Optional[Sequence[float]] = None,
    periodic: Optional[Sequence[bool]] = None,
) -> float:
    """``max_{h <= h_max} S_p(h) / h^alpha`` over lattice shifts: a finite-grid
    stand-in for the B^alpha_{p,inf} seminorm."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    a, sp, per = _layout(field, spacing, periodic)
    axes_t = tuple(range(a.ndim)) if axes is None else tuple(axes)
    hmin = max(sp[ax] for ax in axes_t)
    if h_max is None:
        h_max = min(a.shape[ax] * sp[ax] for ax in axes_t) / 2.0
    n = int(math.floor(h_max / hmin + 1e-9))
    if n < 1:
        raise ValueError("h_max is below one grid cell")
    sf = structure_function(a, p, axes_t, hmin * np.arange(1, n + 1), sp, per)
    return float(np.max(sf.values / sf.shifts**alpha))


def gagliardo_seminorm(a: np.ndarray, alpha: float, p: float = 2.0, length: float = 1.0) -> float:
    """Periodic 1D ``(int int |f(x)-f(y)|^p / |x-y|^{1+alpha p})^{1/p}`` by the
    O(N^2) double sum over distinct nodes. For cross-checks on small grids."""
    a = np.asarray(a, float)
    n = a.size
    h = length / n
    tot = 0.0
    for k in range(1, n):
        dist = min(k, n - k) * h
        tot += np.sum(np.abs(np.roll(a, k) - a) ** p) / dist ** (1.0 + alpha * p)
    return float((tot * h * h) ** (1.0 / p))
