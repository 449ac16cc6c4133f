"""Absorption structures on uniform frequency grids and the dispersion they imply.

Optical depths are single-pass exponents ``d = alpha * L`` so that a field
travelling through the sample is attenuated by ``exp(-d / 2)``. Frequencies
are offsets from a grid origin; ``nu0_hz`` ties the origin to an absolute
optical carrier where one is needed (index -> phase, group index).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import hilbert

from .errors import InvalidArgumentError, ResolutionError

logger = logging.getLogger(__name__)

C0 = 299_792_458.0  # m/s

SHAPES = ("gaussian", "lorentzian", "square")

# Minimum samples per narrowest spectral feature.
POINTS_PER_FEATURE = 8


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def next_pow2(n: float) -> int:
    return 1 << max(0, int(np.ceil(np.log2(max(n, 1)))))


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid; point k sits at ``center - span/2 + k*dnu``."""

    center_hz: float
    span_hz: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 16 or not _is_pow2(int(self.n_points)):
            raise InvalidArgumentError(
                f"n_points must be a power of two >= 16, got {self.n_points}"
            )
        if not self.span_hz > 0:
            raise InvalidArgumentError(f"span_hz must be > 0, got {self.span_hz}")

    @property
    def dnu(self) -> float:
        return self.span_hz / self.n_points

    @property
    def nu(self) -> np.ndarray:
        return self.center_hz - self.span_hz / 2 + np.arange(self.n_points) * self.dnu

    def shifted(self, offset_hz: float) -> "FrequencyGrid":
        return FrequencyGrid(self.center_hz + offset_hz, self.span_hz, self.n_points)


def make_grid(center_hz: float, span_hz: float, n_points: int) -> FrequencyGrid:
    return FrequencyGrid(float(center_hz), float(span_hz), int(n_points))


@dataclass(frozen=True)
class CombSpec:
    """Parametric atomic frequency comb.

    Peak ``k`` (0-based) is centred at ``center_hz + (k - (n_peaks-1)/2) * delta_hz``.
    ``peak_d`` is the optical depth at a peak centre (including the background),
    ``background_d0`` the depth between peaks.
    """

    n_peaks: int
    delta_hz: float
    gamma_fwhm_hz: float
    peak_d: float
    background_d0: float = 0.0
    shape: str = "gaussian"
    center_hz: float = 0.0

    def __post_init__(self):
        if self.n_peaks < 1:
            raise InvalidArgumentError(f"n_peaks must be >= 1, got {self.n_peaks}")
        if not (self.delta_hz > self.gamma_fwhm_hz > 0):
            raise InvalidArgumentError(
                "finesse invariant violated: need delta_hz > gamma_fwhm_hz > 0 "
                f"(got delta_hz={self.delta_hz}, gamma_fwhm_hz={self.gamma_fwhm_hz})"
            )
        if not (self.peak_d >= self.background_d0 >= 0):
            raise InvalidArgumentError(
                f"need peak_d >= background_d0 >= 0 (got {self.peak_d}, {self.background_d0})"
            )
        if self.shape not in SHAPES:
            raise InvalidArgumentError(f"shape must be one of {SHAPES}, got {self.shape!r}")

    @property
    def finesse(self) -> float:
        return self.delta_hz / self.gamma_fwhm_hz

    @property
    def peak_centers_hz(self) -> np.ndarray:
        k = np.arange(self.n_peaks)
        return self.center_hz + (k - (self.n_peaks - 1) / 2) * self.delta_hz

    @property
    def extent_hz(self) -> tuple[float, float]:
        half = (self.n_peaks - 1) / 2 * self.delta_hz + self.gamma_fwhm_hz
        return self.center_hz - half, self.center_hz + half


@dataclass(frozen=True)
class InhomogeneousLine:
    center_hz: float
    fwhm_hz: float
    center_d: float
    shape: str = "lorentzian"

    def __post_init__(self):
        if not self.fwhm_hz > 0:
            raise InvalidArgumentError(f"fwhm_hz must be > 0, got {self.fwhm_hz}")
        if not self.center_d >= 0:
            raise InvalidArgumentError(f"center_d must be >= 0, got {self.center_d}")
        if self.shape != "lorentzian":
            raise InvalidArgumentError("only lorentzian inhomogeneous lines are supported")

    def depth_at(self, nu_hz) -> np.ndarray:
        hw2 = (self.fwhm_hz / 2) ** 2
        nu = np.asarray(nu_hz, dtype=float)
        return self.center_d * hw2 / ((nu - self.center_hz) ** 2 + hw2)


@dataclass(eq=False)
class AbsorptionSpectrum:
    """Optical depth ``d(nu)`` sampled on ``grid``.

    ``min_feature_hz`` is the width of the narrowest structure that built the
    spectrum; it drives the resolution check in :func:`kramers_kronig_index`.
    """

    grid: FrequencyGrid
    d_of_nu: np.ndarray
    min_feature_hz: Optional[float] = None

    def __post_init__(self):
        self.d_of_nu = np.asarray(self.d_of_nu, dtype=float)
        if self.d_of_nu.shape != (self.grid.n_points,):
            raise InvalidArgumentError(
                f"d_of_nu has shape {self.d_of_nu.shape}, grid has {self.grid.n_points} points"
            )
        if np.any(self.d_of_nu < 0) or not np.all(np.isfinite(self.d_of_nu)):
            raise InvalidArgumentError("optical depth must be finite and >= 0")

    def __add__(self, other: "AbsorptionSpectrum") -> "AbsorptionSpectrum":
        if other.grid != self.grid:
            raise InvalidArgumentError("cannot add spectra on different grids")
        feats = [f for f in (self.min_feature_hz, other.min_feature_hz) if f is not None]
        return AbsorptionSpectrum(self.grid, self.d_of_nu + other.d_of_nu, min(feats) if feats else None)


@dataclass(eq=False)
class ComplexIndex:
    """Real refractive index ``n_bg + delta_n(nu)`` around carrier ``nu0_hz``."""

    grid: FrequencyGrid
    delta_n: np.ndarray
    n_bg: float = 1.8
    nu0_hz: float = C0 / 605.977e-9
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delta_n = np.asarray(self.delta_n)
        if np.iscomplexobj(self.delta_n):
            raise InvalidArgumentError("delta_n must be real-valued")
        self.delta_n = self.delta_n.astype(float)
        if self.delta_n.shape != (self.grid.n_points,):
            raise InvalidArgumentError("delta_n length does not match grid")
        if np.max(np.abs(self.delta_n), initial=0.0) > 0.1 * self.n_bg:
            warnings.warn(
                "|delta_n| exceeds 0.1*n_bg; narrowband index model is unreliable",
                RuntimeWarning,
                stacklevel=2,
            )

    @property
    def nu_abs(self) -> np.ndarray:
        return self.nu0_hz + (self.grid.nu - self.grid.center_hz)

    @property
    def n_r(self) -> np.ndarray:
        return self.n_bg + self.delta_n


def peak_shape(x, shape: str = "gaussian") -> np.ndarray:
    """Unit-peak line shape of the reduced detuning ``x = (nu - nu_k) / fwhm``."""
    x = np.asarray(x, dtype=float)
    if shape == "gaussian":
        return np.exp(-4 * np.log(2) * x**2)
    if shape == "lorentzian":
        return 1.0 / (1.0 + 4 * x**2)
    if shape == "square":
        return (np.abs(x) <= 0.5).astype(float)
    raise InvalidArgumentError(f"unknown shape {shape!r}")


def comb_optical_depth(comb: CombSpec, grid: FrequencyGrid) -> AbsorptionSpectrum:
    nu = grid.nu
    lo, hi = comb.extent_hz
    if lo < nu[0] or hi > nu[-1]:
        warnings.warn("comb extends beyond the grid; peaks are truncated", RuntimeWarning, stacklevel=2)
    profile = np.zeros_like(nu)
    for nu_k in comb.peak_centers_hz:
        profile += peak_shape((nu - nu_k) / comb.gamma_fwhm_hz, comb.shape)
    d = comb.background_d0 + (comb.peak_d - comb.background_d0) * profile
    return AbsorptionSpectrum(grid, d, min_feature_hz=comb.gamma_fwhm_hz)


def inhomogeneous_depth(line: InhomogeneousLine, grid: FrequencyGrid) -> AbsorptionSpectrum:
    return AbsorptionSpectrum(grid, line.depth_at(grid.nu), min_feature_hz=line.fwhm_hz)


def carve_pit(
    spectrum: AbsorptionSpectrum, center_hz: float, width_hz: float, residual_d: float = 0.0
) -> AbsorptionSpectrum:
    """Replace the depth inside ``|nu - center| <= width/2`` by ``residual_d``."""
    if not width_hz > 0:
        raise InvalidArgumentError("pit width must be > 0")
    d = spectrum.d_of_nu.copy()
    inside = np.abs(spectrum.grid.nu - center_hz) <= width_hz / 2
    d[inside] = residual_d
    feats = [f for f in (spectrum.min_feature_hz, width_hz) if f is not None]
    return AbsorptionSpectrum(spectrum.grid, d, min_feature_hz=min(feats))


def _edge_taper(n: int, fraction: float) -> np.ndarray:
    w = np.ones(n)
    m = int(round(fraction * n))
    if m > 0:
        ramp = 0.5 * (1 - np.cos(np.pi * np.arange(m) / m))
        w[:m] = ramp
        w[-m:] = ramp[::-1]
    return w


def causal_partner(chi_imag: np.ndarray, pad_factor: int = 4, taper_fraction: float = 0.05) -> np.ndarray:
    """Real part of a causal response whose imaginary part is ``chi_imag``.

    Uses the analytic-signal Hilbert transform on a zero-padded copy. The mean
    of the two edge samples is removed first (a constant has no dispersive
    partner), then a raised-cosine taper brings the edges to zero.
    The returned sign is the physical one: an absorption peak at ``nu_c`` gives
    a positive real part below ``nu_c`` and negative above.
    """
    f = np.asarray(chi_imag, dtype=float)
    n = f.size
    f = (f - 0.5 * (f[0] + f[-1])) * _edge_taper(n, taper_fraction)
    n_fft = next_pow2(max(pad_factor, 1) * n)
    start = (n_fft - n) // 2
    padded = np.zeros(n_fft)
    padded[start : start + n] = f
    return -np.imag(hilbert(padded))[start : start + n]


def check_resolution(grid: FrequencyGrid, feature_hz: Optional[float], what: str = "feature") -> None:
    if feature_hz is None:
        return
    if feature_hz / grid.dnu < POINTS_PER_FEATURE:
        raise ResolutionError(
            f"grid step {grid.dnu:.4g} Hz resolves the {feature_hz:.4g} Hz {what} with "
            f"{feature_hz / grid.dnu:.2f} points; need >= {POINTS_PER_FEATURE}"
        )


def kramers_kronig_index(
    absorption: AbsorptionSpectrum,
    nu0_hz: float,
    n_bg: float = 1.8,
    length_m: float = 2e-3,
    pad_factor: int = 4,
    taper_fraction: float = 0.05,
) -> ComplexIndex:
    """Refractive-index change implied by an absorption spectrum.

    Narrowband model around the carrier ``nu0_hz``:
    ``chi''(nu) = alpha(nu) c0 / (2 pi nu0)`` with ``alpha = d / L``, the real
    susceptibility follows by Kramers-Kronig and ``delta_n = chi' / 2``.
    """
    if not length_m > 0:
        raise InvalidArgumentError(f"length_m must be > 0, got {length_m}")
    grid = absorption.grid
    check_resolution(grid, absorption.min_feature_hz)
    d = absorption.d_of_nu
    peak = np.max(d, initial=0.0)
    if peak > 0 and max(d[0], d[-1]) > 0.1 * peak:
        warnings.warn(
            "absorption does not decay toward the grid edges; dispersion near the edges is unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    chi_imag = (d / length_m) * C0 / (2 * np.pi * nu0_hz)
    chi_real = causal_partner(chi_imag, pad_factor, taper_fraction)
    return ComplexIndex(
        grid,
        chi_real / 2,
        n_bg=n_bg,
        nu0_hz=nu0_hz,
        meta={"length_m": length_m, "pad_factor": pad_factor},
    )


def group_index(idx: ComplexIndex) -> np.ndarray:
    """``n_g = n_r + nu * dn_r/dnu`` with ``nu`` the absolute optical frequency."""
    if idx.grid.n_points < 3:
        raise InvalidArgumentError("group index needs at least 3 grid points")
    slope = np.gradient(idx.delta_n, idx.grid.dnu)
    return idx.n_r + idx.nu_abs * slope

