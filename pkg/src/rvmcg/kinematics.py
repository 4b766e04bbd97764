"""Relativistic momentum/velocity algebra and the Lorentz force.

Momenta are arrays whose *last* axis holds the 1 or 2 momentum components,
so a single point is shape ``(d,)`` and a grid of points is ``(..., d)``.
Everything is dimensionless (c = 1, unit charge-to-mass ratio).
"""
from __future__ import annotations

import numpy as np


def _as_momentum(xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = xi[None]
    if xi.shape[-1] not in (1, 2):
        raise ValueError(f"momentum must have 1 or 2 components, got {xi.shape[-1]}")
    return xi


def gamma(xi) -> np.ndarray:
    """Lorentz factor ``sqrt(1 + |xi|^2)`` over the last axis."""
    xi = _as_momentum(xi)
    return np.sqrt(1.0 + np.sum(xi * xi, axis=-1))


def velocity(xi) -> np.ndarray:
    """Velocity ``xi / gamma(xi)``; same shape as ``xi``.

    ``|v| < 1`` holds in floating point while ``|xi|`` stays below about 7e7;
    beyond that ``1 - |v|`` is smaller than half an ulp and rounds to 0.
    """
    xi = _as_momentum(xi)
    return xi / gamma(xi)[..., None]


def velocity_jacobian(xi) -> np.ndarray:
    """Jacobian ``d v_i / d xi_j = delta_ij / gamma - xi_i xi_j / gamma^3``.

    Returns shape ``(..., d, d)``. Its operator norm never exceeds 2 (in fact
    it is at most ``1/gamma``).
    """
    xi = _as_momentum(xi)
    g = gamma(xi)[..., None, None]
    d = xi.shape[-1]
    outer = xi[..., :, None] * xi[..., None, :]
    return np.eye(d) / g - outer / g**3


def lorentz_force(E, Bz, xi) -> np.ndarray:
    """Lorentz force ``E + v x B`` in the 1D2V reduction.

    ``E`` has components ``(Ex, Ey)`` on its last axis and ``Bz`` is the
    out-of-plane magnetic field, so the force is
    ``(Ex + v_y Bz, Ey - v_x Bz)``. Inputs broadcast against each other.
    """
    xi = _as_momentum(xi)
    if xi.shape[-1] != 2:
        raise ValueError("lorentz_force needs 2-component momenta (1D2V)")
    v = velocity(xi)
    E = np.asarray(E, dtype=float)
    Bz = np.asarray(Bz, dtype=float)
    fx = E[..., 0] + v[..., 1] * Bz
    fy = E[..., 1] - v[..., 0] * Bz
    return np.stack(np.broadcast_arrays(fx, fy), axis=-1)
