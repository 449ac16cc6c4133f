"""Two-mirror cavity formed by the coated crystal, with a dispersive absorber inside."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, ResolutionError
from .pulses import TimeTrace, spectral_fwhm, to_spectrum
from .spectral import (
    C0,
    POINTS_PER_FEATURE,
    AbsorptionSpectrum,
    ComplexIndex,
    FrequencyGrid,
    InhomogeneousLine,
    group_index,
    inhomogeneous_depth,
    kramers_kronig_index,
    make_grid,
    next_pow2,
)


@dataclass(frozen=True)
class CavitySpec:
    """Mirror reflectivities are power values. ``mode_coupling`` is the fraction
    of the input beam that overlaps the cavity mode; the rest is reflected
    straight back without interacting. ``r1_loss``/``r2_loss`` are optional
    coating absorption losses (power)."""

    length_m: float = 2e-3
    r1_power: float = 0.8
    r2_power: float = 0.997
    n_bg: float = 1.8
    mode_coupling: float = 1.0
    r1_loss: float = 0.0
    r2_loss: float = 0.0

    def __post_init__(self):
        if not self.length_m > 0:
            raise InvalidArgumentError(f"length_m must be > 0, got {self.length_m}")
        for name in ("r1_power", "r2_power"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise InvalidArgumentError(f"{name} must lie in [0, 1], got {v}")
        if not 0 < self.mode_coupling <= 1:
            raise InvalidArgumentError(f"mode_coupling must lie in (0, 1], got {self.mode_coupling}")
        if self.r1_power + self.r1_loss > 1 or self.r2_power + self.r2_loss > 1:
            raise InvalidArgumentError("mirror reflectivity plus loss exceeds 1")
        if min(self.r1_loss, self.r2_loss) < 0:
            raise InvalidArgumentError("mirror losses must be >= 0")


@dataclass(eq=False)
class CavityResponse:
    grid: Optional[FrequencyGrid]
    r_of_nu: np.ndarray
    t_of_nu: np.ndarray

    @property
    def reflectance(self) -> np.ndarray:
        return np.abs(self.r_of_nu) ** 2

    @property
    def transmittance(self) -> np.ndarray:
        return np.abs(self.t_of_nu) ** 2


@dataclass(frozen=True)
class Resonance:
    nu_res_hz: float
    local_fsr_hz: float
    linewidth_hz: float


@dataclass(eq=False)
class ScanResult:
    offsets_hz: np.ndarray
    reflected_fraction: np.ndarray
    cavity: Optional[CavitySpec] = None

    @property
    def minimum(self) -> tuple[float, float]:
        i = int(np.argmin(self.reflected_fraction))
        return float(self.offsets_hz[i]), float(self.reflected_fraction[i])


def single_pass_amplitude(
    absorption: AbsorptionSpectrum,
    idx: Optional[ComplexIndex],
    length_m: float,
    nu0_hz: float,
    n_bg: Optional[float] = None,
) -> np.ndarray:
    """Complex field factor for one pass through the sample.

    Spectra use ``X(nu) = int x(t) exp(-2j pi nu t) dt``, so propagation delay
    enters as ``exp(-2j pi nu n L / c0)``. ``idx=None`` means no resonant dispersion; ``n_bg`` then defaults to 1.8.
    """
    grid = absorption.grid
    if idx is not None:
        if idx.grid != grid:
            raise InvalidArgumentError("absorption and index live on different grids")
        n = idx.n_r
    else:
        n = np.full(grid.n_points, 1.8 if n_bg is None else n_bg)
    nu_abs = nu0_hz + (grid.nu - grid.center_hz)
    phase = 2 * np.pi * nu_abs * n * length_m / C0
    return np.exp(-absorption.d_of_nu / 2) * np.exp(-1j * phase)


def cavity_response(
    a,
    r1_power: float,
    r2_power: float,
    grid: Optional[FrequencyGrid] = None,
    r1_loss: float = 0.0,
    r2_loss: float = 0.0,
) -> CavityResponse:
    """Reflection and transmission of the cavity for single-pass factor ``a``.

    The directly reflected field carries the sign flip, so the leaked field can
    cancel it: ``r = (-r1 + (1 - A1) r2 a^2) / (1 - r1 r2 a^2)``.
    """
    a = np.asarray(a, dtype=complex)
    r1, r2 = np.sqrt(r1_power), np.sqrt(r2_power)
    a2 = a * a
    loop = r1 * r2 * a2
    if np.any(np.abs(loop) >= 1):
        raise InvalidArgumentError("round-trip gain >= 1; medium is not passive")
    denom = 1 - loop
    r = (-r1 + (1 - r1_loss) * r2 * a2) / denom
    t = np.sqrt((1 - r1_power - r1_loss) * (1 - r2_power - r2_loss)) * a / denom
    return CavityResponse(grid, r, t)


def response_for(absorption: AbsorptionSpectrum, idx: Optional[ComplexIndex], cav: CavitySpec, nu0_hz: float) -> CavityResponse:
    a = single_pass_amplitude(absorption, idx, cav.length_m, nu0_hz, n_bg=cav.n_bg)
    return cavity_response(a, cav.r1_power, cav.r2_power, absorption.grid, cav.r1_loss, cav.r2_loss)


def impedance_matched_r1(d_single_pass: float) -> float:
    """Input-coupler reflectivity that equals the round-trip survival ``exp(-2d)``."""
    if d_single_pass < 0:
        raise InvalidArgumentError(f"single-pass depth must be >= 0, got {d_single_pass}")
    return float(np.exp(-2 * d_single_pass))


def empty_fsr(cav: CavitySpec) -> float:
    return C0 / (2 * cav.length_m * cav.n_bg)


def round_trip_phase(idx: ComplexIndex, length_m: float) -> np.ndarray:
    return 4 * np.pi * idx.nu_abs * idx.n_r * length_m / C0


def tune_length(cav: CavitySpec, nu_abs_hz: float, n_eff: Optional[float] = None) -> CavitySpec:
    """Smallest length change that puts a resonance at ``nu_abs_hz``.

    Stands in for translating the wedged crystal: the change is below half a
    wavelength in the medium.
    """
    n = cav.n_bg if n_eff is None else n_eff
    order = round(2 * nu_abs_hz * n * cav.length_m / C0)
    return replace(cav, length_m=order * C0 / (2 * nu_abs_hz * n))


def shift_length(cav: CavitySpec, phase_rad: float, nu_abs_hz: float) -> CavitySpec:
    """Lengthen the cavity so the round-trip phase at ``nu_abs_hz`` grows by ``phase_rad``."""
    dl = phase_rad * C0 / (4 * np.pi * nu_abs_hz * cav.n_bg)
    return replace(cav, length_m=cav.length_m + dl)


def empty_finesse(cav: CavitySpec) -> float:
    rr = np.sqrt(cav.r1_power * cav.r2_power)
    if rr >= 1:
        return np.inf
    return np.pi * np.sqrt(rr) / (1 - rr)


def dispersive_mode_structure(
    idx: ComplexIndex,
    cav: CavitySpec,
    absorption: Optional[AbsorptionSpectrum] = None,
) -> list[Resonance]:
    """Resonances where the round-trip phase is a multiple of 2*pi.

    Brackets sign changes of ``phase/2pi - m`` on the grid and bisects each
    bracket to ``dnu/100`` with the index linearly interpolated. The local FSR
    uses the group index at the resonance; the linewidth scale divides it by the
    cavity finesse (including single-pass absorption when ``absorption`` is given).
    """
    grid = idx.grid
    nu = grid.nu
    L = cav.length_m
    n_g = group_index(idx)

    def order(x):
        dn = np.interp(x, nu, idx.delta_n)
        return 2 * (idx.nu0_hz + x - grid.center_hz) * (idx.n_bg + dn) * L / C0

    q = order(nu)
    lo_m = np.floor(q[:-1])
    hi_m = np.floor(q[1:])
    tol = grid.dnu / 100
    out: list[Resonance] = []
    for i in np.nonzero(lo_m != hi_m)[0]:
        m_lo, m_hi = sorted((lo_m[i], hi_m[i]))
        for m in np.arange(m_lo + 1, m_hi + 1):
            a, b = nu[i], nu[i + 1]
            fa = order(a) - m
            while b - a > tol:
                c = 0.5 * (a + b)
                fc = order(c) - m
                if np.sign(fc) == np.sign(fa) and fc != 0:
                    a, fa = c, fc
                else:
                    b = c
            x = 0.5 * (a + b)
            ng = float(np.interp(x, nu, n_g))
            fsr = C0 / (2 * L * abs(ng))
            rr = np.sqrt(cav.r1_power * cav.r2_power)
            if absorption is not None:
                rr *= float(np.exp(-np.interp(x, nu, absorption.d_of_nu)))
            finesse = np.pi * np.sqrt(rr) / (1 - rr) if rr < 1 else np.inf
            out.append(Resonance(float(x), float(fsr), float(fsr / finesse)))
    out.sort(key=lambda r: r.nu_res_hz)
    return out


def _line_index_grid(line: InhomogeneousLine, offsets: np.ndarray) -> FrequencyGrid:
    reach = max(np.max(np.abs(offsets - line.center_hz)), line.fwhm_hz)
    span = 2 * max(2 * reach, 200 * line.fwhm_hz)
    n = next_pow2(max(span / (line.fwhm_hz / (2 * POINTS_PER_FEATURE)), 16))
    return make_grid(line.center_hz, span, n)


def reflection_scan(
    line: InhomogeneousLine,
    cav: CavitySpec,
    probe: TimeTrace,
    scan_offsets: Sequence[float],
    nu0_hz: float,
    line_index: Optional[ComplexIndex] = None,
) -> ScanResult:
    """Reflected energy fraction of a weak probe as the laser is tuned across the line.

    ``nu0_hz`` is the absolute frequency of the line centre. Each entry of
    ``scan_offsets`` tunes the probe carrier relative to that centre. The
    returned fraction includes the light that misses the cavity mode:
    ``eps * R_mode + (1 - eps)``.
    """
    offsets = np.asarray(scan_offsets, dtype=float)
    X = to_spectrum(probe)
    local = X.grid
    bw = spectral_fwhm(X)
    if bw / local.dnu < POINTS_PER_FEATURE:
        raise ResolutionError(
            f"probe spectrum ({bw:.4g} Hz FWHM) has {bw / local.dnu:.2f} points per width; "
            f"need >= {POINTS_PER_FEATURE}"
        )
    if line_index is None:
        g = _line_index_grid(line, offsets)
        line_index = kramers_kronig_index(inhomogeneous_depth(line, g), nu0_hz, cav.n_bg, cav.length_m)
    big_nu = line_index.grid.nu
    power = X.power
    e_in = np.sum(power)
    eps = cav.mode_coupling
    out = np.empty(offsets.size)
    for j, off in enumerate(offsets):
        nu_line = off + local.nu
        d = line.depth_at(nu_line)
        dn = np.interp(nu_line, big_nu, line_index.delta_n)
        phase = 4 * np.pi * (nu0_hz + nu_line) * (cav.n_bg + dn) * cav.length_m / C0
        a2 = np.exp(-d) * np.exp(-1j * phase)
        r1, r2 = np.sqrt(cav.r1_power), np.sqrt(cav.r2_power)
        r = (-r1 + (1 - cav.r1_loss) * r2 * a2) / (1 - r1 * r2 * a2)
        out[j] = eps * np.sum(np.abs(r) ** 2 * power) / e_in + (1 - eps)
    return ScanResult(offsets, out, cav)


def best_position_scan(
    line: InhomogeneousLine,
    cav: CavitySpec,
    probe: TimeTrace,
    scan_offsets: Sequence[float],
    nu0_hz: float,
    n_positions: int = 32,
) -> ScanResult:
    """Repeat :func:`reflection_scan` over crystal positions and keep the best one.

    Positions step the effective length through half a wavelength in the
    medium, which walks the cavity modes through one free spectral range.
    """
    offsets = np.asarray(scan_offsets, dtype=float)
    g = _line_index_grid(line, offsets)
    idx = kramers_kronig_index(inhomogeneous_depth(line, g), nu0_hz, cav.n_bg, cav.length_m)
    best: Optional[ScanResult] = None
    for k in range(max(1, int(n_positions))):
        c = shift_length(cav, 2 * np.pi * k / max(1, int(n_positions)), nu0_hz)
        res = reflection_scan(line, c, probe, offsets, nu0_hz, line_index=idx)
        if best is None or res.minimum[1] < best.minimum[1]:
            best = res
    return best
