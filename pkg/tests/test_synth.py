import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rvmcg.grid import PhaseGrid
from rvmcg.regularity import exponent_fit, structure_function
from rvmcg.synth import (
    ALPHA_CRIT,
    BETA_STAR,
    KINDS,
    NyquistError,
    SynthSpec,
    field_x,
    generate,
    onsager_condition,
    onsager_ensemble,
    random_fourier,
    weierstrass,
)

N = 4096


@pytest.fixture(scope="module")
def pg():
    return PhaseGrid(64, 1.0, (32,), 3.0)


@pytest.mark.parametrize("kind", KINDS)
def test_zero_amplitude(kind, pg):
    spec = SynthSpec(0.5, kind, 3, amplitude=0.0)
    assert np.all(generate(spec, 256) == 0.0)
    assert np.all(generate(spec, pg).values == 0.0)


@pytest.mark.parametrize("kind", KINDS)
def test_same_seed_bit_identical(kind, pg):
    spec = SynthSpec(0.4, kind, 11)
    assert np.array_equal(generate(spec, pg).values, generate(spec, pg).values)
    assert generate(spec, 512).tobytes() == generate(spec, 512).tobytes()


def test_different_seeds_differ(pg):
    a = generate(SynthSpec(0.4, "weierstrass", 1), pg).values
    b = generate(SynthSpec(0.4, "weierstrass", 2), pg).values
    assert not np.array_equal(a, b)


@given(st.floats(0.1, 10.0), st.integers(0, 2**32))
def test_amplitude_linearity(c, seed):
    g = PhaseGrid(32, 1.0, (16, 16), 3.0)
    one = generate(SynthSpec(0.5, "random_fourier", seed), g).values
    scaled = generate(SynthSpec(0.5, "random_fourier", seed, amplitude=c), g).values
    np.testing.assert_allclose(scaled, c * one, rtol=1e-14, atol=0)


@given(st.sampled_from(KINDS), st.floats(0.05, 0.95), st.integers(0, 2**63))
def test_phase_space_fields_nonnegative(kind, a, seed):
    g = PhaseGrid(32, 1.0, (16, 16), 3.0)
    f = generate(SynthSpec(a, kind, seed), g).values
    assert f.min() >= 0.0


def test_onsager_condition_values():
    assert onsager_condition(0.5, 0.5) == pytest.approx(1.25, abs=1e-15)
    assert onsager_condition(0.1, 0.1) == pytest.approx(-0.59, abs=1e-15)
    c = onsager_condition(0.24, BETA_STAR)
    assert c > 0 and c == pytest.approx(0.24 * BETA_STAR + BETA_STAR - 0.28, abs=1e-15)


def test_threshold_constants():
    s = math.sqrt(142)
    assert BETA_STAR == 6 / (13 + s)
    assert ALPHA_CRIT == pytest.approx((7 + s) / (45 + 3 * s), rel=1e-14)
    assert ALPHA_CRIT == pytest.approx(0.234, abs=1e-3)
    assert ALPHA_CRIT < math.sqrt(5) - 2
    # alpha_c is exactly where the condition changes sign at beta*
    assert onsager_condition(ALPHA_CRIT, BETA_STAR) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.xfail(strict=True, reason="6/(13+sqrt(142)) = 0.2408055, not 0.2406698")
def test_beta_star_decimal_0_2406698():
    assert BETA_STAR == pytest.approx(0.2406698, abs=1e-6)


def test_onsager_ensemble_outputs(pg):
    s = onsager_ensemble(0.5, 0.5, pg, seed=4)
    assert s.condition == pytest.approx(1.25) and s.conserving
    assert s.f.values.min() >= 0
    assert abs(s.em.ex.mean()) < 1e-14
    low = onsager_ensemble(0.1, 0.1, pg, seed=4)
    assert not low.conserving
    full = onsager_ensemble(0.5, 0.5, PhaseGrid(32, 1.0, (16, 16), 3.0), seed=1)
    assert full.em.ey is not None and full.em.bz is not None
    again = onsager_ensemble(0.5, 0.5, pg, seed=4)
    assert np.array_equal(s.f.values, again.f.values) and np.array_equal(s.em.ex, again.em.ex)


def test_onsager_ensemble_rejects_bad_exponents(pg):
    with pytest.raises(ValueError):
        onsager_ensemble(1.0, 0.5, pg)
    with pytest.raises(ValueError):
        onsager_ensemble(0.5, 0.0, pg)


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(0.5, "brownian")
    with pytest.raises(ValueError):
        SynthSpec(1.2, "weierstrass")
    with pytest.raises(ValueError):
        SynthSpec(0.5, axes=("y",))
    with pytest.raises(ValueError):
        SynthSpec(0.5, seed=-1)


def test_nyquist_violations():
    rng = np.random.default_rng(0)
    with pytest.raises(NyquistError):
        weierstrass(64, 0.5, rng, octaves=5)
    with pytest.raises(NyquistError):
        random_fourier((64,), 0.5, rng, n_max=32)
    with pytest.raises(NyquistError):
        generate(SynthSpec(0.5, "weierstrass", n_modes=8), 256)


def test_modes_stay_below_nyquist():
    for n in (64, 256, 1000):
        spec = np.abs(np.fft.rfft(weierstrass(n, 0.5, np.random.default_rng(1))))
        assert spec[n // 2:].max() < 1e-9 * spec.max()


def test_random_fourier_spectrum_modulus():
    a = 0.5
    c = np.fft.fft(random_fourier((256,), a, np.random.default_rng(3))) / 256
    k = np.arange(1, 128)
    np.testing.assert_allclose(np.abs(c[k]), (1.0 + k) ** (-(a + 0.5)), rtol=1e-10)
    assert abs(c[0]) < 1e-14


def test_field_x_zero_mean():
    e = field_x("weierstrass", 0.3, 128, 9, amplitude=2.0)
    assert abs(e.mean()) < 1e-14 and e.shape == (128,)


@pytest.mark.parametrize("a", [0.3, 0.5, 0.7])
def test_weierstrass_exponent_1d(a):
    fit = exponent_fit(structure_function(generate(SynthSpec(a, "weierstrass", 5), N)))
    assert fit.alpha_hat == pytest.approx(a, abs=0.1)


def _tensor_2d(a, kind, seed, n=256):
    sx = generate(SynthSpec(a, kind, seed), n)
    sy = generate(SynthSpec(a, kind, seed + 1), n)
    return (1 + sx / 2)[:, None] * (1 + sy / 2)[None]


@pytest.mark.parametrize("a", [0.3, 0.5, 0.7])
def test_weierstrass_exponent_2d(a):
    assert exponent_fit(structure_function(_tensor_2d(a, "weierstrass", 2))).alpha_hat == pytest.approx(a, abs=0.15)


def test_phase_space_x_slice_exponent():
    g = PhaseGrid(256, 1.0, (256,), 4.0)
    for a in (0.3, 0.5, 0.7):
        f = generate(SynthSpec(a, "weierstrass", 0), g)
        assert exponent_fit(structure_function(f, axes=(0,))).alpha_hat == pytest.approx(a, abs=0.15)


@pytest.mark.xfail(strict=True, reason="fixed [4dx, L/8] window underestimates the spectral exponent (0.245/0.391/0.531)")
def test_random_fourier_exponent_1d():
    for a in (0.3, 0.5, 0.7):
        fit = exponent_fit(structure_function(generate(SynthSpec(a, "random_fourier", 5), N)))
        assert fit.alpha_hat == pytest.approx(a, abs=0.1)


@pytest.mark.xfail(strict=True, reason="same window bias in 2D (0.233/0.344/0.458)")
def test_random_fourier_exponent_2d():
    for a in (0.3, 0.5, 0.7):
        f = random_fourier((256, 256), a, np.random.default_rng(0))
        assert exponent_fit(structure_function(f)).alpha_hat == pytest.approx(a, abs=0.15)
