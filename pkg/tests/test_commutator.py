import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rvmcg.commutator import (
    CommutatorReport,
    balanced_path,
    ensemble_sweep,
    eta_exponent,
    fs_bound_constant,
    fs_commutator,
    lorentz_commutator,
    remainder_r,
    scaling_sweep,
)
from rvmcg.fitting import loglog_fit
from rvmcg.grid import DistField, EMField, PhaseGrid, RVMState
from rvmcg.mollify import _profile
from rvmcg.solver import Trajectory
from rvmcg.synth import SynthSpec, generate


@pytest.fixture
def g2():
    return PhaseGrid(32, 1.0, (24, 24), 3.0)


def smooth_field(g, seed=0):
    rng = np.random.default_rng(seed)
    x = g.x[:, None, None] if g.dxi_dims == 2 else g.x[:, None]
    xi = g.xi_mesh()
    r2 = np.sum(xi * xi, -1)
    shift = rng.uniform(0, 1)
    return DistField(g, (1.2 + np.cos(2 * np.pi * (x - shift)) * 0.5) * np.exp(-r2)[None] * (1 + 0.3 * xi[..., 0])[None])


def test_remainder_vanishes_for_constant_operand(g2):
    f = smooth_field(g2).values
    c = np.full(g2.nx, 3.0)
    np.testing.assert_allclose(remainder_r(c, f, g2, 0.1, 0.6), 0.0, atol=1e-14)
    np.testing.assert_allclose(remainder_r(f, c, g2, 0.1, 0.6), 0.0, atol=1e-14)
    # full arrays are zero beyond the momentum cutoff, so only x-averaging keeps them constant
    full = np.full(g2.shape, 3.0)
    np.testing.assert_allclose(remainder_r(full, f, g2, eps=0.1), 0.0, atol=1e-14)


def test_remainder_sine_against_continuum_quadrature():
    n = 512
    g = PhaseGrid(n, 1.0, (4,), 1.0)
    k = 2 * np.pi
    s = np.sin(k * g.x)
    eps = 1 / 16
    r = remainder_r(s, s, g, eps=eps)
    i = n // 2
    z = np.linspace(-1, 1, 200001)
    w = _profile(np.abs(z), "bump")
    x0 = g.x[i]
    oracle = np.trapezoid(w * (np.sin(k * (x0 - eps * z)) - np.sin(k * x0)) ** 2, z) / np.trapezoid(w, z)
    assert r[i, 0] == pytest.approx(oracle, rel=1e-5)


def test_fs_constant_field(g2):
    f = DistField(g2, np.full(g2.shape, 2.0))
    assert fs_commutator(f, 0.1, 0.6).norm <= 1e-13


def test_fs_routes_agree(g2):
    flat = DistField(g2, np.broadcast_to((1 + 0.4 * np.sin(2 * np.pi * g2.x))[:, None, None], g2.shape).copy())
    for f in (flat, smooth_field(g2, 2)):
        a = fs_commutator(f, 0.1, 0.6, route="identity")
        b = fs_commutator(f, 0.1, 0.6, route="direct")
        assert a.norm == pytest.approx(b.norm, rel=1e-10)
        np.testing.assert_allclose(a.field, b.field, atol=1e-10 * np.abs(b.field).max())
    with pytest.raises(ValueError):
        fs_commutator(flat, 0.1, 0.6, route="other")


def test_lorentz_constant_electric_field(g2):
    f = smooth_field(g2, 1)
    rep = lorentz_commutator(f, EMField(np.full(32, 0.7), np.full(32, -0.2), np.zeros(32)), 0.1, 0.6)
    assert rep.lorentz_norm <= 1e-12 and rep.te_norm <= 1e-12


def test_tb11_vanishes_for_constant_b(g2):
    f = smooth_field(g2, 3)
    rep = lorentz_commutator(f, EMField(np.zeros(32), np.zeros(32), np.full(32, 1.3)), 0.1, 0.6)
    assert rep.tb11_norm <= 1e-8


def test_decomposition_is_pointwise_exact(g2):
    f = smooth_field(g2, 4)
    rng = np.random.default_rng(5)
    em = EMField(*(np.cos(2 * np.pi * (g2.x - rng.uniform())) * rng.uniform(0.5, 1.5) for _ in range(3)))
    rep = lorentz_commutator(f, em, 0.1, 0.6, keep_fields=True)
    p = rep.parts
    total = p["te"] + p["tb1"] + p["tb2"] + p["tb3"]
    np.testing.assert_allclose(total, p["total"], atol=1e-10 * np.abs(p["total"]).max())
    assert rep.lorentz_norm <= rep.parts_sum + 1e-10


@given(st.integers(0, 2**31))
def test_norms_nonnegative_and_triangle(seed):
    g = PhaseGrid(16, 1.0, (12, 12), 3.0)
    rng = np.random.default_rng(seed)
    f = DistField(g, rng.uniform(size=g.shape))
    em = EMField(rng.normal(size=16), rng.normal(size=16), rng.normal(size=16))
    rep = lorentz_commutator(f, em, 0.15, 1.0)
    vals = [rep.fs_norm, rep.te_norm, rep.tb1_norm, rep.tb2_norm, rep.tb3_norm, rep.lorentz_norm]
    assert all(v >= 0 for v in vals)
    assert rep.lorentz_norm <= rep.parts_sum + 1e-10


def test_balanced_path_at_unit_scale():
    for a, b in [(0.3, 0.24), (0.5, 0.3), (0.9, 0.1)]:
        assert balanced_path(a, b, 1.0).delta == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-15)


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(1e-4, 10.0))
def test_balanced_path_root(a, b, eps):
    bp = balanced_path(a, b, eps)
    assert bp.delta > 0
    assert bp.root_residual <= 1e-12
    assert bp.eta_residual == pytest.approx(eps ** (a - 1) * bp.delta ** (a + 1), rel=1e-14)
    assert bp.regime == ("i" if 2 * a + b - 1 < 0 else "ii")


def test_balanced_path_rejects_bad_exponents():
    with pytest.raises(ValueError):
        balanced_path(1.0, 0.5, 0.1)
    with pytest.raises(ValueError):
        balanced_path(0.5, 0.5, 0.0)


def _regime_i_ratio_spread():
    eps = np.geomspace(1e-3, 1e-1, 21)
    ratio = np.array([balanced_path(0.3, 0.24, e).delta / e**0.62 for e in eps])
    return ratio.max() / ratio.min() - 1


def _eta_fit(a, b):
    eps = np.geomspace(1e-3, 1e-1, 21)
    return loglog_fit(eps, [balanced_path(a, b, e).eta_residual for e in eps]).slope


@pytest.mark.xfail(strict=True, reason="leading-order asymptote only; the ratio still moves ~13% over [1e-3, 1e-1]")
def test_regime_i_asymptote_within_five_percent():
    assert _regime_i_ratio_spread() < 0.05


def test_regime_i_asymptote_approached():
    # the spread shrinks as the window moves toward eps -> 0
    eps = np.geomspace(1e-9, 1e-7, 21)
    ratio = np.array([balanced_path(0.3, 0.24, e).delta / e**0.62 for e in eps])
    assert ratio.max() / ratio.min() - 1 < _regime_i_ratio_spread()


@pytest.mark.xfail(strict=True, reason="subleading corrections: the fit over [1e-3, 1e-1] gives 0.140 against 0.106")
def test_eta_exponent_formula_regime_i():
    assert _eta_fit(0.3, 0.24) == pytest.approx(eta_exponent(0.3, 0.24), abs=0.01)


@pytest.mark.xfail(strict=True, reason="(0.5, 0.3) lies in regime ii, where the eta residual decays as ~eps^0.32")
def test_eta_exponent_formula_regime_ii():
    assert _eta_fit(0.5, 0.3) == pytest.approx(eta_exponent(0.5, 0.3), abs=0.01)


def test_eta_exponent_deep_in_regime_i():
    # regime i holds for 2a + b < 1; the formula is the eps -> 0 limit there
    eps = np.geomspace(1e-12, 1e-10, 11)
    slope = loglog_fit(eps, [balanced_path(0.2, 0.3, e).eta_residual for e in eps]).slope
    assert slope == pytest.approx(eta_exponent(0.2, 0.3), abs=0.01)


def test_sweep_constant_field_is_flagged():
    g = PhaseGrid(64, 1.0, (32,), 2.0)
    f = DistField(g, np.ones(g.shape))
    rep = scaling_sweep((f, EMField(np.zeros(64))), [0.04, 0.06], [0.3, 0.4, 0.5])
    assert all(r.fs_norm <= 1e-13 for r in rep.rows)
    fit = rep.slope("fs_norm", "delta", 0.04)
    assert fit.flagged and math.isnan(fit.slope)


def test_sweep_single_pair():
    g = PhaseGrid(64, 1.0, (32,), 2.0)
    f = smooth_field(g)
    rep = scaling_sweep((f, EMField(np.zeros(64))), [0.05], [0.4])
    assert len(rep.table()) == 1 and rep.fits == []
    assert rep.table()[0][:2] == (0.05, 0.4)
    assert CommutatorReport.CSV_COLUMNS[2:] == ("fs_norm", "te_norm", "tb1_norm", "tb2_norm", "tb3_norm", "lorentz_norm")


def test_sweep_rejects_unsorted_and_unresolved():
    g = PhaseGrid(64, 1.0, (32,), 2.0)
    src = (smooth_field(g), EMField(np.zeros(64)))
    with pytest.raises(ValueError):
        scaling_sweep(src, [0.05, 0.03, 0.08], [0.4])
    with pytest.raises(ValueError):
        scaling_sweep(src, [0.001], [0.4])


def test_sweep_independent_of_worker_count():
    g = PhaseGrid(64, 1.0, (32,), 2.0)
    f = generate(SynthSpec(0.5, "weierstrass", 3), g)
    src = (f, EMField(np.sin(2 * np.pi * g.x)))
    a = scaling_sweep(src, [0.04, 0.06, 0.09], [0.3, 0.45], workers=1).table()
    b = scaling_sweep(src, [0.04, 0.06, 0.09], [0.3, 0.45], workers=4).table()
    assert a == b


def test_trajectory_norms_are_time_integrals():
    g = PhaseGrid(32, 1.0, (16,), 2.0)
    f = smooth_field(g)
    em = EMField(np.sin(2 * np.pi * g.x))
    traj = Trajectory([RVMState(t, f, em) for t in (0.0, 0.5, 1.0)])
    one = scaling_sweep((f, em), [0.08], [0.6]).rows[0]
    many = scaling_sweep(traj, [0.08], [0.6]).rows[0]
    assert many.fs_norm == pytest.approx(one.fs_norm, rel=1e-12)
    assert many.te_norm == pytest.approx(one.te_norm, rel=1e-12)


def test_fs_bound_constant_is_stable():
    g = PhaseGrid(512, 1.0, (512,), 4.0)
    eps = np.geomspace(2 * g.dx, 32 * g.dx, 4)
    delta = np.geomspace(2 * g.dxi[0], 32 * g.dxi[0], 4)
    srcs = [(generate(SynthSpec(0.5, "weierstrass", s), g), EMField(np.zeros(512))) for s in range(3)]
    c = fs_bound_constant(ensemble_sweep(srcs, eps, delta), 0.5)
    assert c.max() / c.min() <= 1.2 / 0.8
