"""AFC storage and retrieval: closed-form efficiency, comb optimisation and
transfer-function simulations in free space and inside the cavity."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .cavity import CavitySpec, dispersive_mode_structure, response_for, single_pass_amplitude, tune_length
from .errors import ConfigurationError, InvalidArgumentError, TruncationError, WindowOverlapError
from .pulses import TimeGrid, TimeTrace, intensity_fwhm, spectral_fwhm, to_spectrum, to_time
from .spectral import (
    C0,
    POINTS_PER_FEATURE,
    AbsorptionSpectrum,
    CombSpec,
    check_resolution,
    comb_optical_depth,
    kramers_kronig_index,
    next_pow2,
    peak_shape,
)

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass
class EchoMetrics:
    t_echo_s: float
    efficiency: float
    window: tuple[float, float]
    echo_peak_time_s: float
    secondary_echoes: list[float] = field(default_factory=list)
    transmitted_efficiency: Optional[float] = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        if out["transmitted_efficiency"] is None:
            del out["transmitted_efficiency"]
        return out


@dataclass(frozen=True)
class AfcParams:
    d: float
    d0: float
    finesse: float

    def __post_init__(self):
        if not (self.d >= self.d0 >= 0):
            raise InvalidArgumentError(f"need d >= d0 >= 0 (got d={self.d}, d0={self.d0})")
        if not self.finesse > 1:
            raise InvalidArgumentError(f"finesse must be > 1, got {self.finesse}")

    @property
    def d_eff(self) -> float:
        return (self.d - self.d0) / self.finesse


def analytic_afc_efficiency(p: AfcParams) -> float:
    """Forward-recall efficiency of a Gaussian-peak comb."""
    de = p.d_eff
    return float(de**2 * np.exp(-de) * np.exp(-7 / p.finesse**2) * np.exp(-p.d0))


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-3) -> float:
    """Maximiser of a unimodal ``f`` on ``[lo, hi]``; ties move toward ``lo``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    if f(lo) >= f(x):
        return lo
    return x


def optimize_finesse(d: float, d0: float, f_range: tuple[float, float] = (1.01, 100.0), tol: float = 1e-3):
    """Finesse maximising the closed-form efficiency for fixed peak and background depth."""
    lo, hi = map(float, f_range)
    if not (1 < lo < hi <= 100):
        raise InvalidArgumentError(f"finesse range must satisfy 1 < lo < hi <= 100, got {f_range}")
    AfcParams(d, d0, lo)
    f = lambda F: analytic_afc_efficiency(AfcParams(d, d0, F))  # noqa: E731
    F_best = golden_section_max(f, lo, hi, tol)
    return F_best, f(F_best)


def echo_time(delta_hz: float) -> float:
    if not delta_hz > 0:
        raise InvalidArgumentError(f"delta_hz must be > 0, got {delta_hz}")
    return 1.0 / delta_hz


def _peak_time(t: np.ndarray, y: np.ndarray) -> float:
    i = int(np.argmax(y))
    if 0 < i < y.size - 1:
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        den = y0 - 2 * y1 + y2
        if den != 0:
            return float(t[i] + 0.5 * (y0 - y2) / den * (t[1] - t[0]))
    return float(t[i])


def extract_echo_efficiency(
    y: TimeTrace,
    x_ref: TimeTrace,
    t_echo: float,
    window_halfwidth: Optional[float] = None,
    n_secondary: int = 2,
) -> EchoMetrics:
    """Energy in the window around ``t_ref + t_echo`` divided by the reference energy.

    ``t_ref`` is the intensity peak of ``x_ref``; the default half-width is
    1.5 times the reference intensity FWHM.
    """
    t_ref = _peak_time(x_ref.t, x_ref.intensity)
    if window_halfwidth is None:
        window_halfwidth = 1.5 * intensity_fwhm(x_ref)
    if t_echo < 2 * window_halfwidth:
        raise WindowOverlapError(
            f"echo at {t_echo:.4g} s overlaps the input window (half-width {window_halfwidth:.4g} s)"
        )
    t = y.t
    lo, hi = t_ref + t_echo - window_halfwidth, t_ref + t_echo + window_halfwidth
    if lo < t[0] or hi > t[-1]:
        raise TruncationError(f"echo window [{lo:.4g}, {hi:.4g}] s lies outside the trace")
    e_ref = x_ref.energy
    inten = y.intensity
    sel = (t >= lo) & (t <= hi)
    eff = float(np.sum(inten[sel]) * y.grid.dt_s / e_ref) if e_ref > 0 else 0.0
    peak = _peak_time(t[sel], inten[sel]) - t_ref
    secondary = []
    for m in range(2, 2 + n_secondary):
        a, b = t_ref + m * t_echo - window_halfwidth, t_ref + m * t_echo + window_halfwidth
        if b > t[-1]:
            break
        s = (t >= a) & (t <= b)
        secondary.append(float(np.sum(inten[s]) * y.grid.dt_s / e_ref) if e_ref > 0 else 0.0)
    return EchoMetrics(float(t_echo), eff, (float(lo), float(hi)), float(peak), secondary)


def storage_time_grid(
    delta_hz: float,
    gamma_hz: float,
    t_fwhm_s: float,
    comb_width_hz: float = 0.0,
    min_points: int = 16,
) -> TimeGrid:
    """Time grid that resolves both the comb peaks and the pulse spectrum.

    The frequency step gives ``2 * POINTS_PER_FEATURE`` samples per peak width;
    the frequency span covers the pulse spectrum and the comb with margin.
    The pulse is centred one eighth of the way into the window.
    """
    pulse_bw = 4 * np.log(2) / (2 * np.pi * t_fwhm_s)
    dnu = gamma_hz / (2 * POINTS_PER_FEATURE)
    span = max(24 * pulse_bw, 2.5 * comb_width_hz + 8 * delta_hz)
    n = next_pow2(max(span / dnu, min_points))
    dt = 1.0 / (n * dnu)
    return TimeGrid(dt, n, -n * dt / 8)


def _absorption_on(absorber, grid) -> AbsorptionSpectrum:
    if isinstance(absorber, CombSpec):
        return comb_optical_depth(absorber, grid)
    if isinstance(absorber, AbsorptionSpectrum):
        if absorber.grid == grid:
            return absorber
        d = np.interp(grid.nu, absorber.grid.nu, absorber.d_of_nu)
        return AbsorptionSpectrum(grid, d, absorber.min_feature_hz)
    raise InvalidArgumentError(f"unsupported absorber type {type(absorber).__name__}")


def _check_pulse(X, absorber, delta_hz) -> None:
    bw = spectral_fwhm(X)
    check_resolution(X.grid, bw, "pulse bandwidth")
    if bw < 3 * delta_hz:
        warnings.warn(
            f"pulse spectrum ({bw:.4g} Hz) spans fewer than 3 comb periods ({delta_hz:.4g} Hz)",
            RuntimeWarning,
            stacklevel=3,
        )


Absorber = Union[CombSpec, AbsorptionSpectrum]


def simulate_single_pass_storage(
    pulse: TimeTrace,
    comb: Absorber,
    length_m: float,
    nu0_hz: float,
    n_bg: float = 1.8,
    delta_hz: Optional[float] = None,
    window_halfwidth: Optional[float] = None,
) -> tuple[TimeTrace, EchoMetrics]:
    """Propagate ``pulse`` once through the comb: ``Y = exp(-d/2 - i*phase) X``.

    ``comb`` may be a :class:`CombSpec` or a precomputed absorption spectrum
    (then ``delta_hz`` gives the expected echo time).
    """
    delta = comb.delta_hz if isinstance(comb, CombSpec) else delta_hz
    if delta is None:
        raise InvalidArgumentError("delta_hz is required when passing an absorption spectrum")
    X = to_spectrum(pulse)
    _check_pulse(X, comb, delta)
    absorption = _absorption_on(comb, X.grid)
    idx = kramers_kronig_index(absorption, nu0_hz, n_bg, length_m)
    a = single_pass_amplitude(absorption, idx, length_m, nu0_hz)
    Y = replace(X, samples=a * X.samples)
    y = to_time(Y)
    return y, extract_echo_efficiency(y, pulse, echo_time(delta), window_halfwidth)


def align_cavity(cav: CavitySpec, idx, center_hz: float) -> CavitySpec:
    """Tune the length so a resonance sits at ``center_hz`` (grid offset)."""
    nu_abs = idx.nu0_hz + center_hz - idx.grid.center_hz
    n_eff = cav.n_bg + float(np.interp(center_hz, idx.grid.nu, idx.delta_n))
    return tune_length(cav, nu_abs, n_eff)


def simulate_cavity_storage(
    pulse: TimeTrace,
    comb: Absorber,
    cav: CavitySpec,
    nu0_hz: float,
    align: bool = True,
    delta_hz: Optional[float] = None,
    comb_center_hz: Optional[float] = None,
    comb_halfwidth_hz: Optional[float] = None,
    window_halfwidth: Optional[float] = None,
) -> tuple[TimeTrace, EchoMetrics]:
    """AFC storage with the sample inside the cavity, observed at the input port.

    The coupled part of the input sees ``r(nu)``; the uncoupled fraction
    ``1 - mode_coupling`` is reflected promptly and carries no echo. The
    returned trace is the coupled-mode reflected field scaled by
    ``sqrt(mode_coupling)``; efficiencies include the same factor.
    """
    if isinstance(comb, CombSpec):
        delta = comb.delta_hz
        center = comb.center_hz if comb_center_hz is None else comb_center_hz
        half = comb.n_peaks * comb.delta_hz / 2 if comb_halfwidth_hz is None else comb_halfwidth_hz
    else:
        if delta_hz is None:
            raise InvalidArgumentError("delta_hz is required when passing an absorption spectrum")
        delta = delta_hz
        center = 0.0 if comb_center_hz is None else comb_center_hz
        half = 2 * delta if comb_halfwidth_hz is None else comb_halfwidth_hz
    X = to_spectrum(pulse)
    _check_pulse(X, comb, delta)
    absorption = _absorption_on(comb, X.grid)
    idx = kramers_kronig_index(absorption, nu0_hz, cav.n_bg, cav.length_m)
    if align:
        cav = align_cavity(cav, idx, center)
    modes = dispersive_mode_structure(idx, cav, absorption)
    inside = [m for m in modes if abs(m.nu_res_hz - center) <= half]
    if not inside:
        nearest = min(modes, key=lambda m: abs(m.nu_res_hz - center), default=None)
        where = "none on the grid" if nearest is None else f"nearest at {nearest.nu_res_hz - center:+.4g} Hz"
        raise ConfigurationError(
            f"no cavity resonance within +/-{half:.4g} Hz of the comb centre ({where}); "
            "enable alignment or adjust the cavity length"
        )
    resp = response_for(absorption, idx, cav, nu0_hz)
    eps = cav.mode_coupling
    y_r = to_time(replace(X, samples=resp.r_of_nu * X.samples))
    y_t = to_time(replace(X, samples=resp.t_of_nu * X.samples))
    t_echo = echo_time(delta)
    m_r = extract_echo_efficiency(y_r, pulse, t_echo, window_halfwidth)
    m_t = extract_echo_efficiency(y_t, pulse, t_echo, window_halfwidth)
    metrics = EchoMetrics(
        m_r.t_echo_s,
        eps * m_r.efficiency,
        m_r.window,
        m_r.echo_peak_time_s,
        [eps * s for s in m_r.secondary_echoes],
        transmitted_efficiency=eps * m_t.efficiency,
    )
    return y_r.scaled(np.sqrt(eps)), metrics


def comb_mean_depth(comb: CombSpec, n: int = 4096) -> float:
    """Average single-pass depth over one period at the comb centre."""
    x = comb.center_hz + (np.arange(n) / n - 0.5) * comb.delta_hz
    prof = sum(peak_shape((x - c) / comb.gamma_fwhm_hz, comb.shape) for c in comb.peak_centers_hz)
    return float(np.mean(comb.background_d0 + (comb.peak_d - comb.background_d0) * prof))
