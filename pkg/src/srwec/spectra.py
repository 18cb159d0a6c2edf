"""Wave spectra and irregular sea synthesis.

A sea state is described by significant wave height ``hs`` and peak
period ``tp``. The spectral shape is the JONSWAP family with peakedness
``gamma``, rescaled so the zeroth moment is exactly ``hs**2 / 16`` on
the working frequency grid. ``gamma = 1`` (the Pierson-Moskowitz shape)
is the default; it gives the energy-to-peak period ratio Te/Tp of about
0.862 (Tp = 1.16 Te) used by the resource characterization.

Time-domain realizations superpose one cosine per grid frequency with
independent uniform random phases. Component amplitudes carry the
trapezoid quadrature weight of their frequency, so the discrete variance
identity sum(a**2) / 2 == m0 holds exactly on any grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from srwec.errors import ValidationError

GRAVITY = 9.80665

# realize() refuses to allocate more samples than this
MAX_SAMPLES = 50_000_000


@dataclass(frozen=True)
class SeaState:
    """Target sea described by (hs, tp) and spectral peakedness."""

    hs: float
    tp: float
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if not self.hs > 0:
            raise ValidationError(f"hs must be > 0, got {self.hs}")
        if not self.tp > 0:
            raise ValidationError(f"tp must be > 0, got {self.tp}")
        if not self.gamma >= 1:
            raise ValidationError(f"gamma must be >= 1, got {self.gamma}")


@dataclass(frozen=True)
class SpectralDensity:
    """One-sided variance density S(f) on a strictly increasing grid.

    freq is in hertz, s in m**2/Hz.
    """

    freq: np.ndarray
    s: np.ndarray

    def __post_init__(self) -> None:
        freq = np.asarray(self.freq, dtype=float)
        s = np.asarray(self.s, dtype=float)
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "s", s)
        if freq.ndim != 1 or freq.size < 2:
            raise ValidationError("frequency grid must be 1-D with >= 2 points")
        if s.shape != freq.shape:
            raise ValidationError("s and freq must have the same length")
        if not np.all(np.diff(freq) > 0):
            raise ValidationError("frequency grid must be strictly increasing")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValidationError("density values must be finite and >= 0")


@dataclass(frozen=True)
class WaveRealization:
    """Sampled elevation and surface-slope series for one random draw."""

    dt: float
    elevation: np.ndarray
    slope: np.ndarray
    seed: int

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.elevation.size) * self.dt


def default_grid(tp: float, n: int = 512) -> np.ndarray:
    """Log-spaced frequency grid covering [0.25/tp, 6/tp]."""
    if not tp > 0:
        raise ValidationError(f"tp must be > 0, got {tp}")
    return np.geomspace(0.25 / tp, 6.0 / tp, n)


def jonswap(state: SeaState, freq: np.ndarray | None = None) -> SpectralDensity:
    """JONSWAP density for ``state``, normalized to m0 = hs**2/16.

    The shape is f**-5 * exp(-1.25 (f/fp)**-4) times the peak-enhancement
    factor gamma**exp(-(f-fp)**2 / (2 sigma**2 fp**2)), sigma = 0.07
    below the peak and 0.09 above. The overall scale is then fixed so
    the trapezoid-rule zeroth moment on the given grid equals hs**2/16,
    which makes the normalization exact for downstream moment users.
    """
    if freq is None:
        freq = default_grid(state.tp)
    freq = np.asarray(freq, dtype=float)
    fp = 1.0 / state.tp
    near_peak = np.count_nonzero((freq >= 0.8 * fp) & (freq <= 1.2 * fp))
    if near_peak < 10:
        raise ValidationError(
            f"frequency grid too coarse: {near_peak} points within 20% of the "
            f"spectral peak {fp:.4g} Hz (need >= 10)"
        )
    with np.errstate(over="ignore"):
        shape = freq**-5 * np.exp(-1.25 * (freq / fp) ** -4)
    sigma = np.where(freq <= fp, 0.07, 0.09)
    peak = state.gamma ** np.exp(-((freq - fp) ** 2) / (2 * sigma**2 * fp**2))
    shape *= peak
    m0_shape = np.trapezoid(shape, freq)
    if not m0_shape > 0:
        raise ValidationError("spectral shape integrates to zero on this grid")
    scale = (state.hs**2 / 16.0) / m0_shape
    return SpectralDensity(freq=freq, s=scale * shape)


def moments(density: SpectralDensity, n: int) -> float:
    """Spectral moment m_n = integral of f**n S(f) df (trapezoid rule)."""
    if n not in (-1, 0, 1, 2):
        raise ValidationError(f"moment order must be in {{-1, 0, 1, 2}}, got {n}")
    if n < 0 and density.freq[0] <= 0:
        raise ValidationError("negative moment undefined on a grid containing f <= 0")
    return float(np.trapezoid(density.freq**n * density.s, density.freq))


def significant_wave_height(density: SpectralDensity) -> float:
    """Hs = 4 sqrt(m0)."""
    return 4.0 * np.sqrt(moments(density, 0))


def energy_period(density: SpectralDensity) -> float:
    """Te = m_-1 / m0."""
    return moments(density, -1) / moments(density, 0)


def _quadrature_weights(freq: np.ndarray) -> np.ndarray:
    """Trapezoid-rule weight of each grid frequency."""
    w = np.empty_like(freq)
    w[0] = 0.5 * (freq[1] - freq[0])
    w[-1] = 0.5 * (freq[-1] - freq[-2])
    w[1:-1] = 0.5 * (freq[2:] - freq[:-2])
    return w


def realize(
    density: SpectralDensity,
    duration: float,
    dt: float,
    seed: int,
    chunk: int = 8192,
) -> WaveRealization:
    """Phase-randomized elevation and slope series of the given density.

    Elevation is a superposition of cosines with amplitudes
    a_i = sqrt(2 S_i w_i) (w_i the trapezoid weight), independent
    uniform phases drawn from ``seed``, and the mean removed. Slope uses
    the deep-water wavenumber k = (2 pi f)**2 / g per component. The
    sampling theorem bound dt < 1/(2 f_max) is enforced.
    """
    if not duration > 0 or not dt > 0:
        raise ValidationError("duration and dt must be > 0")
    f_max = density.freq[-1]
    if dt >= 0.5 / f_max:
        raise ValidationError(
            f"dt={dt:.4g} s undersamples the grid (need dt < {0.5 / f_max:.4g} s)"
        )
    n_t = int(round(duration / dt))
    if n_t > MAX_SAMPLES:
        raise ValidationError(f"{n_t} samples exceeds the cap of {MAX_SAMPLES}")

    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, density.freq.size)
    amp = np.sqrt(2.0 * density.s * _quadrature_weights(density.freq))
    k = (2.0 * np.pi * density.freq) ** 2 / GRAVITY
    omega = 2.0 * np.pi * density.freq

    elevation = np.empty(n_t)
    slope = np.empty(n_t)
    for start in range(0, n_t, chunk):
        t = np.arange(start, min(start + chunk, n_t)) * dt
        arg = np.outer(t, omega) + phases
        elevation[start : start + t.size] = np.cos(arg) @ amp
        slope[start : start + t.size] = np.sin(arg) @ (amp * k)
    elevation -= elevation.mean()
    return WaveRealization(dt=dt, elevation=elevation, slope=slope, seed=seed)
