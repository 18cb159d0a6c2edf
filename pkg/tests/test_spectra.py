"""Spectrum construction, moments, and realization statistics."""

import numpy as np
import pytest

from srwec.errors import ValidationError
from srwec.spectra import (
    GRAVITY,
    SeaState,
    SpectralDensity,
    default_grid,
    energy_period,
    jonswap,
    moments,
    realize,
    significant_wave_height,
)


def test_sea_state_validation():
    with pytest.raises(ValidationError):
        SeaState(hs=0.0, tp=8.0)
    with pytest.raises(ValidationError):
        SeaState(hs=1.0, tp=-1.0)
    with pytest.raises(ValidationError):
        SeaState(hs=1.0, tp=8.0, gamma=0.5)


def test_density_validation():
    with pytest.raises(ValidationError):
        SpectralDensity(freq=np.array([1.0, 1.0, 2.0]), s=np.zeros(3))
    with pytest.raises(ValidationError):
        SpectralDensity(freq=np.array([1.0, 2.0]), s=np.array([-1.0, 0.0]))
    with pytest.raises(ValidationError):
        SpectralDensity(freq=np.array([1.0, 2.0, 3.0]), s=np.zeros(2))


@pytest.mark.parametrize("hs,tp", [(0.5, 4.0), (1.5, 8.7), (2.0, 10.0), (8.0, 16.0)])
@pytest.mark.parametrize("gamma", [1.0, 3.3])
def test_m0_normalization_exact(hs, tp, gamma):
    sd = jonswap(SeaState(hs, tp, gamma))
    assert moments(sd, 0) == pytest.approx(hs**2 / 16.0, rel=1e-9)


def test_m0_example():
    sd = jonswap(SeaState(2.0, 10.0))
    assert moments(sd, 0) == pytest.approx(0.25, rel=1e-9)


def test_moments_flat_density():
    freq = np.linspace(1.0, 2.0, 101)
    sd = SpectralDensity(freq=freq, s=np.ones_like(freq))
    assert moments(sd, 0) == pytest.approx(1.0, rel=1e-12)
    assert moments(sd, 1) == pytest.approx(1.5, rel=1e-12)


def test_moment_order_guard():
    sd = jonswap(SeaState(1.0, 8.0))
    with pytest.raises(ValidationError):
        moments(sd, 3)


def test_negative_moment_needs_positive_grid():
    freq = np.linspace(0.0, 1.0, 50)
    sd = SpectralDensity(freq=freq, s=np.ones_like(freq))
    with pytest.raises(ValidationError):
        moments(sd, -1)


def test_te_tp_ratio_default_gamma():
    """The default spectrum encodes Tp = 1.16 Te, the ratio the site
    occurrence table is built on."""
    for hs in (0.5, 2.0, 8.0):
        for tp in (4.0, 8.7, 16.0):
            sd = jonswap(SeaState(hs, tp))
            assert 0.85 <= energy_period(sd) / tp <= 0.88


def test_te_tp_ratio_gamma_1_value():
    # frozen from adaptive quadrature of the PM-shape moments: 0.857
    sd = jonswap(SeaState(1.0, 8.0, gamma=1.0))
    assert energy_period(sd) / 8.0 == pytest.approx(0.857, abs=0.01)


def test_te_tp_ratio_gamma_33_value():
    # peakier spectrum concentrates energy near fp, ratio rises to 0.904
    sd = jonswap(SeaState(1.5, 8.7, gamma=3.3))
    assert energy_period(sd) / 8.7 == pytest.approx(0.904, abs=0.005)


def test_te_example_mid_table():
    sd = jonswap(SeaState(1.5, 8.7))
    assert energy_period(sd) == pytest.approx(7.5, abs=0.05)


def test_coarse_grid_rejected():
    grid = np.linspace(0.02, 0.6, 12)
    with pytest.raises(ValidationError):
        jonswap(SeaState(1.0, 8.0), freq=grid)


def test_default_grid_span():
    g = default_grid(8.0)
    assert g.size == 512
    assert g[0] == pytest.approx(0.25 / 8.0)
    assert g[-1] == pytest.approx(6.0 / 8.0)


class TestRealize:
    def test_zero_spectrum(self):
        freq = np.linspace(0.05, 0.5, 64)
        sd = SpectralDensity(freq=freq, s=np.zeros_like(freq))
        r = realize(sd, 100.0, 0.5, seed=1)
        assert not r.elevation.any()
        assert not r.slope.any()

    def test_determinism(self):
        sd = jonswap(SeaState(2.0, 8.0))
        r1 = realize(sd, 200.0, 0.25, seed=42)
        r2 = realize(sd, 200.0, 0.25, seed=42)
        assert np.array_equal(r1.elevation, r2.elevation)
        assert np.array_equal(r1.slope, r2.slope)
        r3 = realize(sd, 200.0, 0.25, seed=43)
        assert not np.array_equal(r1.elevation, r3.elevation)

    def test_hs_recovered_one_hour(self):
        sd = jonswap(SeaState(2.0, 8.0))
        r = realize(sd, 3600.0, 0.1, seed=7)
        assert 4.0 * np.std(r.elevation) == pytest.approx(2.0, rel=0.02)

    def test_elevation_demeaned(self):
        sd = jonswap(SeaState(1.0, 6.0))
        r = realize(sd, 600.0, 0.2, seed=3)
        assert abs(r.elevation.mean()) < 1e-12

    def test_slope_variance_matches_k2_weighted_moment(self):
        sd = jonswap(SeaState(2.0, 8.0))
        r = realize(sd, 3600.0, 0.1, seed=11)
        k = (2.0 * np.pi * sd.freq) ** 2 / GRAVITY
        expected = np.trapezoid(k**2 * sd.s, sd.freq)
        assert np.var(r.slope) == pytest.approx(expected, rel=0.05)

    def test_near_gaussian_elevation(self):
        sd = jonswap(SeaState(2.0, 7.0))
        kurt = []
        for seed in range(10):
            eta = realize(sd, 1800.0, 0.2, seed=seed).elevation
            z = (eta - eta.mean()) / eta.std()
            kurt.append(np.mean(z**4) - 3.0)
        assert abs(np.mean(kurt)) < 0.3

    def test_undersampling_rejected(self):
        sd = jonswap(SeaState(1.0, 4.0))
        with pytest.raises(ValidationError):
            realize(sd, 100.0, 2.0, seed=0)

    def test_sample_cap(self):
        sd = jonswap(SeaState(1.0, 8.0))
        with pytest.raises(ValidationError):
            realize(sd, 1e9, 0.01, seed=0)

    def test_time_axis(self):
        sd = jonswap(SeaState(1.0, 8.0))
        r = realize(sd, 10.0, 0.5, seed=0)
        assert r.t.size == r.elevation.size
        assert r.t[1] - r.t[0] == pytest.approx(0.5)
