"""Pulse envelopes and the time <-> frequency bridge.

Envelopes live in the rotating frame of the optical carrier. The Fourier pair
is normalised as a discretised continuous transform,
``X(nu) = sum_n x(t_n) exp(-2j pi nu t_n) dt``, so that
``sum |x|^2 dt == sum |X|^2 dnu``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, TruncationError
from .spectral import FrequencyGrid, _is_pow2

# Envelope amplitude allowed at the grid edges, relative to the peak.
EDGE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    dt_s: float
    n_samples: int
    t0_s: float = 0.0

    def __post_init__(self):
        if not self.dt_s > 0:
            raise InvalidArgumentError(f"dt_s must be > 0, got {self.dt_s}")
        if self.n_samples < 16 or not _is_pow2(int(self.n_samples)):
            raise InvalidArgumentError(f"n_samples must be a power of two >= 16, got {self.n_samples}")

    @property
    def t(self) -> np.ndarray:
        return self.t0_s + np.arange(self.n_samples) * self.dt_s

    @property
    def duration_s(self) -> float:
        return self.n_samples * self.dt_s

    def frequency_grid(self) -> FrequencyGrid:
        """Grid conjugate to this one: ``dnu * dt * n == 1``."""
        return FrequencyGrid(0.0, 1.0 / self.dt_s, self.n_samples)


@dataclass(eq=False)
class TimeTrace:
    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != (self.grid.n_samples,):
            raise InvalidArgumentError("sample count does not match time grid")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgumentError("trace contains non-finite samples")

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def energy(self) -> float:
        return float(np.sum(self.intensity) * self.grid.dt_s)

    def scaled(self, factor: complex) -> "TimeTrace":
        return TimeTrace(self.grid, self.samples * factor)


@dataclass(eq=False)
class SpectrumTrace:
    """Complex spectrum on a frequency grid; ``t0_s`` remembers the time origin."""

    grid: FrequencyGrid
    samples: np.ndarray
    t0_s: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != (self.grid.n_points,):
            raise InvalidArgumentError("sample count does not match frequency grid")

    @property
    def nu(self) -> np.ndarray:
        return self.grid.nu

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def energy(self) -> float:
        return float(np.sum(self.power) * self.grid.dnu)


@dataclass(frozen=True)
class GaussianPulseSpec:
    t_fwhm_s: float
    t_center_s: float = 0.0
    carrier_offset_hz: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.t_fwhm_s > 0:
            raise InvalidArgumentError(f"t_fwhm_s must be > 0, got {self.t_fwhm_s}")

    @property
    def spectral_fwhm_hz(self) -> float:
        """Intensity-spectrum FWHM of the transform-limited pulse."""
        return 4 * np.log(2) / (2 * np.pi * self.t_fwhm_s)


@dataclass(frozen=True)
class SechypPulseSpec:
    """Chirped hyperbolic-secant pulse.

    ``t_fwhm_s`` is the FWHM of the amplitude envelope; the instantaneous
    frequency sweeps ``f_width_hz`` around ``center_hz``.
    """

    t_fwhm_s: float
    f_width_hz: float
    center_hz: float = 0.0
    t_center_s: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.t_fwhm_s > 0:
            raise InvalidArgumentError(f"t_fwhm_s must be > 0, got {self.t_fwhm_s}")
        if not self.f_width_hz >= 0:
            raise InvalidArgumentError(f"f_width_hz must be >= 0, got {self.f_width_hz}")

    @property
    def beta(self) -> float:
        # sech(beta * t_fwhm / 2) = 1/2
        return 2 * np.log(2 + np.sqrt(3)) / self.t_fwhm_s

    def instantaneous_frequency(self, t) -> np.ndarray:
        tau = np.asarray(t, dtype=float) - self.t_center_s
        return self.center_hz + 0.5 * self.f_width_hz * np.tanh(self.beta * tau)


def time_grid(dt_s: float, n_samples: int, t0_s: float = 0.0) -> TimeGrid:
    return TimeGrid(float(dt_s), int(n_samples), float(t0_s))


def _check_edges(samples: np.ndarray, peak: float, what: str) -> None:
    edge = max(abs(samples[0]), abs(samples[-1]))
    if peak > 0 and edge > EDGE_TOLERANCE * peak:
        raise TruncationError(
            f"{what} is truncated by the time grid: edge amplitude {edge / peak:.3g} of peak "
            f"(limit {EDGE_TOLERANCE:g})"
        )


def gaussian_waveform(spec: GaussianPulseSpec, tg: TimeGrid) -> TimeTrace:
    tau = tg.t - spec.t_center_s
    x = spec.amplitude * np.exp(-2 * np.log(2) * tau**2 / spec.t_fwhm_s**2)
    x = x * np.exp(2j * np.pi * spec.carrier_offset_hz * tau)
    _check_edges(x, abs(spec.amplitude), "gaussian pulse")
    return TimeTrace(tg, x)


def _log_cosh(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2 * ax)) - np.log(2)


def sechyp_waveform(spec: SechypPulseSpec, tg: TimeGrid) -> TimeTrace:
    tau = tg.t - spec.t_center_s
    bt = spec.beta * tau
    envelope = spec.amplitude / np.cosh(np.clip(bt, -700, 700))
    phase = 2 * np.pi * (spec.center_hz * tau + spec.f_width_hz / (2 * spec.beta) * _log_cosh(bt))
    x = envelope * np.exp(1j * phase)
    _check_edges(x, abs(spec.amplitude), "sechyp pulse")
    return TimeTrace(tg, x)


def to_spectrum(x: TimeTrace) -> SpectrumTrace:
    tg = x.grid
    fg = tg.frequency_grid()
    X = np.fft.fftshift(np.fft.fft(x.samples)) * tg.dt_s
    X *= np.exp(-2j * np.pi * fg.nu * tg.t0_s)
    return SpectrumTrace(fg, X, t0_s=tg.t0_s)


def to_time(X: SpectrumTrace) -> TimeTrace:
    fg = X.grid
    n = fg.n_points
    dt = 1.0 / fg.span_hz
    tg = TimeGrid(dt, n, X.t0_s)
    # Frequencies are offsets around fg.center_hz; a nonzero centre appears as a carrier.
    spec = X.samples * np.exp(2j * np.pi * (fg.nu - fg.center_hz) * X.t0_s)
    x = np.fft.ifft(np.fft.ifftshift(spec)) / dt
    if fg.center_hz != 0.0:
        x = x * np.exp(2j * np.pi * fg.center_hz * tg.t)
    return TimeTrace(tg, x)


def fwhm(x: np.ndarray, y: np.ndarray) -> float:
    """Full width at half maximum of a single-peaked sampled profile."""
    y = np.asarray(y, dtype=float)
    i = int(np.argmax(y))
    half = y[i] / 2
    left = i
    while left > 0 and y[left] > half:
        left -= 1
    right = i
    while right < y.size - 1 and y[right] > half:
        right += 1

    def cross(a, b):
        if y[a] == y[b]:
            return x[a]
        return x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a])

    return float(cross(right - 1, right) - cross(left, left + 1))


def intensity_fwhm(trace: TimeTrace) -> float:
    return fwhm(trace.t, trace.intensity)


def spectral_fwhm(spectrum: SpectrumTrace) -> float:
    return fwhm(spectrum.nu, spectrum.power)
