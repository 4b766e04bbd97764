import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rvmcg.grid import (
    SQUARE,
    XLOGX,
    DistField,
    EMField,
    PhaseGrid,
    RVMState,
    current,
    density,
    entropy_integral,
    lp_norm,
    mass,
    mixed_norm,
    momentum_total,
    total_energy,
)


def gaussian(grid, drift=(0.0, 0.0), sigma=1.0):
    xi = grid.xi_mesh()
    d = grid.dxi_dims
    z = xi - np.asarray(drift[:d])
    return np.exp(-0.5 * np.sum(z * z, -1) / sigma**2) / (2 * np.pi * sigma**2) ** (d / 2)


def field_of(grid, xi_part, x_part=None):
    x_part = np.ones(grid.nx) if x_part is None else x_part
    return DistField(grid, x_part.reshape((-1,) + (1,) * grid.dxi_dims) * xi_part[None])


def test_phase_grid_validation():
    with pytest.raises(ValueError):
        PhaseGrid(0, 1.0, (4,), 1.0)
    with pytest.raises(ValueError):
        PhaseGrid(4, 1.0, (4, 4, 4), 1.0)
    with pytest.raises(ValueError):
        PhaseGrid(4, -1.0, (4,), 1.0)
    g = PhaseGrid(8, 2.0, (6, 4), 3.0)
    assert g.shape == (8, 6, 4) and g.dx == 0.25 and g.dxi == (1.0, 1.5)
    np.testing.assert_array_equal(g.xi_axis(0), -g.xi_axis(0)[::-1])


def test_density_constant_and_zero():
    g = PhaseGrid(8, 1.0, (10, 12), 2.5)
    f = DistField(g, np.full(g.shape, 3.0))
    np.testing.assert_allclose(density(f), 3.0 * (2 * 2.5) ** 2, rtol=1e-14)
    np.testing.assert_array_equal(density(DistField(g, np.zeros(g.shape))), 0.0)


def test_density_gaussian_against_refined_quadrature():
    coarse = PhaseGrid(4, 1.0, (64, 64), 8.0)
    fine = PhaseGrid(4, 1.0, (640, 640), 8.0)
    rc = density(field_of(coarse, gaussian(coarse)))
    rf = density(field_of(fine, gaussian(fine)))
    np.testing.assert_allclose(rc, rf, rtol=1e-8)


def test_current_even_and_drifting():
    g = PhaseGrid(4, 1.0, (48, 48), 6.0)
    np.testing.assert_allclose(current(field_of(g, gaussian(g))), 0.0, atol=1e-14)
    np.testing.assert_array_equal(current(DistField(g, np.zeros(g.shape))), 0.0)
    fine = PhaseGrid(4, 1.0, (480, 480), 6.0)
    jc = current(field_of(g, gaussian(g, (0.7, -0.4))))
    jf = current(field_of(fine, gaussian(fine, (0.7, -0.4))))
    np.testing.assert_allclose(jc, jf, rtol=1e-6)


def test_total_energy_examples():
    g = PhaseGrid(10, 3.0, (8, 8), 2.0)
    zero = DistField(g, np.zeros(g.shape))
    e = total_energy(RVMState(0.0, zero, EMField(np.full(10, 0.5), np.zeros(10), np.zeros(10))))
    assert e.total == pytest.approx(3.0 * 0.25 / 2, rel=1e-14)
    assert total_energy(RVMState(0.0, zero, EMField.zeros(10))).total == 0.0
    c = PhaseGrid(4, 1.0, (64, 64), 8.0)
    f = PhaseGrid(4, 1.0, (512, 512), 8.0)
    kc = total_energy(RVMState(0.0, field_of(c, gaussian(c)), EMField.zeros(4))).kinetic
    kf = total_energy(RVMState(0.0, field_of(f, gaussian(f)), EMField.zeros(4))).kinetic
    assert kc == pytest.approx(kf, rel=1e-6)
    # the (gamma - 1) variant differs by exactly the mass
    e = total_energy(RVMState(0.0, field_of(c, gaussian(c)), EMField.zeros(4)))
    assert e.kinetic - e.kinetic_rel == pytest.approx(mass(field_of(c, gaussian(c))), rel=1e-12)


def test_lp_norm_examples():
    g = PhaseGrid(6, 2.0, (5, 7), 1.5)
    f = DistField(g, np.full(g.shape, 2.0))
    vol = 2.0 * 3.0**2
    for p in (1, 2, 3.5):
        assert lp_norm(f, p) == pytest.approx(2.0 * vol ** (1 / p), rel=1e-14)
    r = np.random.default_rng(1).normal(size=g.shape)
    assert lp_norm(DistField(g, r), np.inf) == np.abs(r).max()
    manual = np.sqrt(sum(float(v) ** 2 for v in r.ravel()[::-1]) * g.cell_volume)
    assert lp_norm(DistField(g, r), 2) == pytest.approx(manual, rel=1e-12)
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


def test_mixed_norm_examples():
    g = PhaseGrid(16, 2.0, (12,), 3.0)
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=16), rng.normal(size=12)
    f = DistField(g, a[:, None] * b[None])
    na = (np.sum(np.abs(a) ** 3) * g.dx) ** (1 / 3)
    nb = (np.sum(np.abs(b) ** 1.5) * g.dxi[0]) ** (1 / 1.5)
    assert mixed_norm(f, 1.5, 3.0) == pytest.approx(na * nb, rel=1e-12)
    c = DistField(g, np.full(g.shape, 2.0))
    assert mixed_norm(c, 2.0, 4.0) == pytest.approx(2.0 * 2.0 ** 0.25 * 6.0**0.5, rel=1e-13)
    r = DistField(g, rng.normal(size=g.shape))
    assert mixed_norm(r, 2, 2) == pytest.approx(lp_norm(r, 2), rel=1e-12)
    with pytest.raises(ValueError):
        mixed_norm(r, 0.5, 2)


def test_entropy_integral_examples():
    g = PhaseGrid(6, 2.0, (8, 8), 1.0)
    assert entropy_integral(DistField(g, np.zeros(g.shape)), SQUARE) == 0.0
    assert entropy_integral(DistField(g, np.ones(g.shape)), SQUARE) == pytest.approx(2.0 * 4.0, rel=1e-14)
    with pytest.raises(ValueError):
        entropy_integral(DistField(g, -np.ones(g.shape)), XLOGX)
    c = PhaseGrid(2, 1.0, (64, 64), 8.0)
    f = PhaseGrid(2, 1.0, (512, 512), 8.0)
    assert entropy_integral(field_of(c, gaussian(c)), SQUARE) == pytest.approx(
        entropy_integral(field_of(f, gaussian(f)), SQUARE), rel=1e-6)


def test_entropy_functions_are_in_class():
    s = np.linspace(0.0, 50.0, 2001)
    for H in (SQUARE, XLOGX):
        h = H.h(s)
        assert np.all(np.diff(h) >= 0)
        np.testing.assert_allclose(np.gradient(h, s)[1:-1], H.dh(s)[1:-1], rtol=1e-3, atol=1e-3)
        assert h[-1] / s[-1] > h[len(s) // 2] / s[len(s) // 2]


def test_momentum_total_examples():
    g = PhaseGrid(8, 3.0, (16, 16), 4.0)
    even = field_of(g, gaussian(g))
    np.testing.assert_allclose(momentum_total(RVMState(0.0, even, EMField.zeros(8))), 0.0, atol=1e-15)
    zero = DistField(g, np.zeros(g.shape))
    p = momentum_total(RVMState(0.0, zero, EMField(np.ones(8), np.zeros(8), np.ones(8))))
    # E x B with E = x_hat, B = z_hat is -y_hat
    np.testing.assert_allclose(p, [0.0, -3.0], atol=1e-14)
    c = PhaseGrid(2, 1.0, (64, 64), 8.0)
    fi = PhaseGrid(2, 1.0, (512, 512), 8.0)
    pc = momentum_total(RVMState(0.0, field_of(c, gaussian(c, (0.5, -0.3))), EMField.zeros(2)))
    pf = momentum_total(RVMState(0.0, field_of(fi, gaussian(fi, (0.5, -0.3))), EMField.zeros(2)))
    np.testing.assert_allclose(pc, pf, rtol=1e-6)


@given(st.floats(-10, 10), st.integers(0, 2**32 - 1))
def test_linearity(a, seed):
    g = PhaseGrid(6, 1.0, (5, 4), 2.0)
    f = np.random.default_rng(seed).normal(size=g.shape)
    F, aF = DistField(g, f), DistField(g, a * f)
    np.testing.assert_allclose(density(aF), a * density(F), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(current(aF), a * current(F), rtol=1e-12, atol=1e-12)
    assert lp_norm(aF, 2) == pytest.approx(abs(a) * lp_norm(F, 2), rel=1e-12, abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, 3.0, np.inf]))
def test_triangle_inequality(seed, p):
    g = PhaseGrid(6, 1.0, (5,), 2.0)
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=g.shape), rng.normal(size=g.shape)
    assert lp_norm(a + b, p, g) <= lp_norm(a, p, g) + lp_norm(b, p, g) + 1e-12


def test_quadrature_second_order_in_momentum():
    # (X^2 - xi^2) has nonzero slope at the cutoff, so the midpoint rule is
    # exactly second order there
    X = 2.0
    exact = 4 * X**3 / 3
    errs = []
    for n in (16, 32, 64):
        g = PhaseGrid(1, 1.0, (n,), X)
        xi = g.xi_axis(0)
        errs.append(abs(density(DistField(g, (X**2 - xi**2)[None])).item() - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.9)
