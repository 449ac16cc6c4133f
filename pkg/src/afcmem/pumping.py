"""Rate-equation model of the optical pumping that prepares the comb.

Each ion class is labelled by the frequency of its reference transition
(by default the storage transition |5/2g> -> |5/2e>). A pump pulse addressing
transition (g, e) acts on every class whose (g, e) line falls inside the
pulse's chirp window, moving a fraction ``p`` of the population in ``g`` to
``e``; the excited population then decays fully before the next pulse.

Level index order is (+-1/2, +-3/2, +-5/2) for both ground and excited states.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .errors import InvalidArgumentError
from .pulses import SechypPulseSpec
from .spectral import AbsorptionSpectrum, FrequencyGrid, InhomogeneousLine, peak_shape

N_LEVELS = 3


@dataclass(frozen=True)
class HyperfineSystem:
    ground_splittings_hz: tuple[float, float]
    excited_splittings_hz: tuple[float, float]
    branching: np.ndarray  # b[e][g]
    rel_strength: np.ndarray  # f[g][e]
    t1_s: float
    reference: tuple[int, int] = (2, 2)
    min_wait_t1: float = 3.0

    def __post_init__(self):
        b = np.asarray(self.branching, dtype=float)
        f = np.asarray(self.rel_strength, dtype=float)
        object.__setattr__(self, "branching", b)
        object.__setattr__(self, "rel_strength", f / f.max())
        if b.shape != (3, 3) or f.shape != (3, 3):
            raise InvalidArgumentError("branching and rel_strength must be 3x3")
        if np.any(b < 0) or np.any(np.abs(b.sum(axis=1) - 1) > 1e-12):
            raise InvalidArgumentError("branching rows must be non-negative and sum to 1")
        if np.any(f < 0):
            raise InvalidArgumentError("oscillator strengths must be >= 0")
        if min(self.ground_splittings_hz) <= 0 or min(self.excited_splittings_hz) <= 0:
            raise InvalidArgumentError("hyperfine splittings must be > 0")
        if not self.t1_s > 0:
            raise InvalidArgumentError("t1_s must be > 0")

    @property
    def shifts_hz(self) -> np.ndarray:
        """``shift[g][e]``: transition frequency relative to the reference transition."""
        eg = np.concatenate([[0.0], np.cumsum(self.ground_splittings_hz)])
        ee = np.concatenate([[0.0], np.cumsum(self.excited_splittings_hz)])
        tr = ee[None, :] - eg[:, None]
        return tr - tr[self.reference]


def placeholder_system() -> HyperfineSystem:
    """Hyperfine data resembling Pr3+:Y2SiO5 site I.

    Configurable placeholders drawn from the general literature, not measured
    values for any particular sample.
    """
    f = np.array(
        [
            [0.55, 0.38, 0.07],
            [0.40, 0.60, 0.01],
            [0.05, 0.02, 0.93],
        ]
    )
    b = (f / f.sum(axis=0)).T
    return HyperfineSystem(
        ground_splittings_hz=(10.19e6, 17.30e6),
        excited_splittings_hz=(4.82e6, 4.60e6),
        branching=b,
        rel_strength=f,
        t1_s=164e-6,
    )


@dataclass(eq=False)
class IonClassEnsemble:
    """Populations per class; columns are (g1, g2, g3, e1, e2, e3)."""

    detuning_hz: np.ndarray
    pops: np.ndarray

    def __post_init__(self):
        self.detuning_hz = np.asarray(self.detuning_hz, dtype=float)
        self.pops = np.asarray(self.pops, dtype=float)
        if self.pops.shape != (self.detuning_hz.size, 2 * N_LEVELS):
            raise InvalidArgumentError("pops must have shape (n_classes, 6)")
        if np.any(self.pops < -1e-15):
            raise InvalidArgumentError("populations must be >= 0")

    @property
    def weights(self) -> np.ndarray:
        return self.pops.sum(axis=1)

    @property
    def ground(self) -> np.ndarray:
        return self.pops[:, :N_LEVELS]

    def copy(self) -> "IonClassEnsemble":
        return IonClassEnsemble(self.detuning_hz.copy(), self.pops.copy())


@dataclass(frozen=True)
class PumpEntry:
    pulse: SechypPulseSpec
    ground: int
    excited: int
    p: float = 0.95

    def __post_init__(self):
        if self.ground not in range(3) or self.excited not in range(3):
            raise InvalidArgumentError("level indices must be 0, 1 or 2")
        if not 0 <= self.p <= 1:
            raise InvalidArgumentError(f"transfer probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class PumpSequence:
    """``repetitions`` passes over ``entries``.

    By default each entry is repeated back to back before moving on (one comb
    peak at a time); ``interleave=True`` cycles through the whole list instead.
    """

    entries: tuple[PumpEntry, ...]
    repetitions: int = 50
    wait_s: float = 500e-6
    interleave: bool = False

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.repetitions < 1:
            raise InvalidArgumentError("repetitions must be >= 1")
        if not self.wait_s >= 0:
            raise InvalidArgumentError("wait_s must be >= 0")


def _check_wait(wait_s: float, sys: HyperfineSystem) -> None:
    if wait_s < sys.min_wait_t1 * sys.t1_s:
        raise InvalidArgumentError(
            f"wait {wait_s:.3g} s is shorter than {sys.min_wait_t1:g} x T1 ({sys.t1_s:.3g} s); "
            "full relaxation between pulses cannot be assumed"
        )


def init_ensemble(
    line: InhomogeneousLine,
    n_classes: int,
    sys: HyperfineSystem,
    span_hz: Optional[float] = None,
    center_hz: Optional[float] = None,
) -> IonClassEnsemble:
    """Equally spaced classes with Lorentzian weights, ground states equally populated.

    The default span is +-3 line widths. A narrower ``span_hz`` simulates only
    the neighbourhood of a spectral feature at a useful class density.
    """
    if n_classes < 100:
        raise InvalidArgumentError(f"n_classes must be >= 100, got {n_classes}")
    span = 6 * line.fwhm_hz if span_hz is None else float(span_hz)
    c = line.center_hz if center_hz is None else float(center_hz)
    det = np.linspace(c - span / 2, c + span / 2, int(n_classes))
    w = peak_shape((det - line.center_hz) / line.fwhm_hz, "lorentzian")
    w = w / w.sum()
    pops = np.zeros((det.size, 2 * N_LEVELS))
    pops[:, :N_LEVELS] = w[:, None] / N_LEVELS
    return IonClassEnsemble(det, pops)


def addressed(ens: IonClassEnsemble, entry: PumpEntry, sys: HyperfineSystem) -> np.ndarray:
    """Classes whose addressed line lies in ``[center - fw/2, center + fw/2)``."""
    x = ens.detuning_hz + sys.shifts_hz[entry.ground, entry.excited]
    half = entry.pulse.f_width_hz / 2
    c = entry.pulse.center_hz
    return (x >= c - half) & (x < c + half)


def apply_pump_pulse(
    ens: IonClassEnsemble, entry: PumpEntry, sys: HyperfineSystem, wait_s: Optional[float] = None
) -> IonClassEnsemble:
    if wait_s is not None:
        _check_wait(wait_s, sys)
    out = ens.copy()
    _pump_inplace(out.pops, addressed(ens, entry, sys), entry, sys)
    return out


def _pump_inplace(pops: np.ndarray, mask: np.ndarray, entry: PumpEntry, sys: HyperfineSystem) -> None:
    if entry.p == 0 or not mask.any():
        return
    g = entry.ground
    moved = entry.p * pops[mask, g]
    pops[mask, g] -= moved
    # Full decay of the excited state before the next pulse.
    pops[mask, :N_LEVELS] += moved[:, None] * sys.branching[entry.excited][None, :]


def run_sequence(ens: IonClassEnsemble, seq: PumpSequence, sys: HyperfineSystem) -> IonClassEnsemble:
    _check_wait(seq.wait_s, sys)
    out = ens.copy()
    masks = [addressed(ens, e, sys) for e in seq.entries]
    if seq.interleave:
        for _ in range(seq.repetitions):
            for e, m in zip(seq.entries, masks):
                _pump_inplace(out.pops, m, e, sys)
    else:
        for e, m in zip(seq.entries, masks):
            for _ in range(seq.repetitions):
                _pump_inplace(out.pops, m, e, sys)
    return out


def clean_background(
    ens: IonClassEnsemble,
    cleaning: PumpSequence,
    sys: HyperfineSystem,
    comb_centers_hz: Optional[Sequence[float]] = None,
) -> IonClassEnsemble:
    """Pump away residual absorbers between comb peaks.

    Warns when a cleaning window covers one of ``comb_centers_hz`` (given on
    the reference-transition axis).
    """
    if comb_centers_hz is not None:
        centers = np.asarray(comb_centers_hz, dtype=float)
        for e in cleaning.entries:
            c = e.pulse.center_hz - sys.shifts_hz[e.ground, e.excited]
            half = e.pulse.f_width_hz / 2
            hit = centers[(centers >= c - half) & (centers < c + half)]
            if hit.size:
                warnings.warn(
                    f"cleaning window at {c:.6g} Hz (+-{half:.3g} Hz) overlaps comb peak(s) {hit.tolist()}",
                    RuntimeWarning,
                    stacklevel=2,
                )
    return run_sequence(ens, cleaning, sys)


def ensemble_absorption(
    ens: IonClassEnsemble,
    grid: FrequencyGrid,
    sys: HyperfineSystem,
    d_scale: float = 1.0,
    hom_fwhm_hz: float = 10e3,
) -> AbsorptionSpectrum:
    """Optical depth of the ensemble on the reference-transition frequency axis.

    ``d = d_scale * sum_c sum_(g,e) pop[c,g] f[g,e] S((nu - nu_c - shift[g,e]) / hom)``
    with ``S`` a unit-peak Lorentzian. Class weights are deposited linearly onto
    an extended copy of the grid and convolved with the sampled line shape.
    """
    if not hom_fwhm_hz > 0:
        raise InvalidArgumentError("hom_fwhm_hz must be > 0")
    dnu = grid.dnu
    margin = int(np.ceil(200 * hom_fwhm_hz / dnu))
    n_ext = grid.n_points + 2 * margin
    start = grid.nu[0] - margin * dnu
    dens = np.zeros(n_ext)
    shifts = sys.shifts_hz
    f = sys.rel_strength
    for g in range(N_LEVELS):
        pop_g = ens.pops[:, g]
        for e in range(N_LEVELS):
            if f[g, e] == 0:
                continue
            pos = (ens.detuning_hz + shifts[g, e] - start) / dnu
            i0 = np.floor(pos).astype(int)
            frac = pos - i0
            w = pop_g * f[g, e]
            for idx, wt in ((i0, w * (1 - frac)), (i0 + 1, w * frac)):
                ok = (idx >= 0) & (idx < n_ext)
                np.add.at(dens, idx[ok], wt[ok])
    k = np.arange(-n_ext + 1, n_ext) * dnu
    kernel = peak_shape(k / hom_fwhm_hz, "lorentzian")
    full = fftconvolve(dens, kernel, mode="full")[n_ext - 1 : 2 * n_ext - 1]
    d = d_scale * np.clip(full[margin : margin + grid.n_points], 0, None)
    return AbsorptionSpectrum(grid, d, min_feature_hz=hom_fwhm_hz)


def calibrate_d_scale(
    ens: IonClassEnsemble,
    sys: HyperfineSystem,
    target_d: float,
    grid: FrequencyGrid,
    at_hz: float = 0.0,
    hom_fwhm_hz: float = 10e3,
) -> float:
    """``d_scale`` that makes ``ens`` absorb ``target_d`` at ``at_hz``."""
    raw = ensemble_absorption(ens, grid, sys, 1.0, hom_fwhm_hz)
    return target_d / float(np.interp(at_hz, grid.nu, raw.d_of_nu))


# Sequence builders for the preparation used in the storage experiment.


def pit_sequence(
    center_hz: float,
    width_hz: float,
    sys: HyperfineSystem,
    repetitions: int = 100,
    p: float = 0.95,
    wait_s: float = 500e-6,
    t_fwhm_s: float = 20e-6,
) -> PumpSequence:
    """Empty ``[center - width/2, center + width/2)`` on every transition."""
    entries = [
        PumpEntry(SechypPulseSpec(t_fwhm_s, width_hz, center_hz), g, e, p)
        for g in range(N_LEVELS)
        for e in range(N_LEVELS)
    ]
    return PumpSequence(tuple(entries), repetitions, wait_s, interleave=True)


def comb_sequence(
    peak_centers_hz: Sequence[float],
    sys: HyperfineSystem,
    f_width_hz: float = 70e3,
    t_fwhm_s: float = 16.8e-6,
    repetitions: int = 50,
    wait_s: float = 500e-6,
    source: int = 0,
    target: int = 2,
    p: float = 0.95,
) -> PumpSequence:
    """Burn-back pulses: ions in ``source`` ground state excited to ``target``
    so that they decay into the storage ground state at each peak frequency."""
    shift = sys.shifts_hz[source, target]
    entries = [
        PumpEntry(SechypPulseSpec(t_fwhm_s, f_width_hz, c + shift), source, target, p) for c in peak_centers_hz
    ]
    return PumpSequence(tuple(entries), repetitions, wait_s)


def cleaning_sequence(
    peak_centers_hz: Sequence[float],
    sys: HyperfineSystem,
    f_width_hz: float = 300e3,
    t_fwhm_s: float = 20e-6,
    repetitions: int = 50,
    wait_s: float = 500e-6,
    margin_hz: float = 100e3,
    ground: int = 2,
    excited: int = 0,
    p: float = 0.95,
) -> PumpSequence:
    """Windows tiling each gap between neighbouring peaks, ``margin_hz`` clear of both.

    Default transition (5/2g -> 1/2e) decays mostly away from the storage state.
    """
    centers = np.sort(np.asarray(peak_centers_hz, dtype=float))
    shift = sys.shifts_hz[ground, excited]
    entries = []
    for lo, hi in zip(centers[:-1], centers[1:]):
        a, b = lo + margin_hz, hi - margin_hz
        if b - a < f_width_hz:
            continue
        n = int(np.ceil((b - a) / f_width_hz))
        for c in np.linspace(a + f_width_hz / 2, b - f_width_hz / 2, n):
            entries.append(PumpEntry(SechypPulseSpec(t_fwhm_s, f_width_hz, c + shift), ground, excited, p))
    return PumpSequence(tuple(entries), repetitions, wait_s, interleave=True)


@dataclass
class PreparationResult:
    pit: IonClassEnsemble
    comb: IonClassEnsemble
    cleaned: IonClassEnsemble
    sequences: dict = field(default_factory=dict)


def prepare_afc(
    sys: HyperfineSystem,
    peak_centers_hz: Sequence[float],
    line: InhomogeneousLine,
    pit_width_hz: float = 8e6,
    n_classes: int = 20001,
    span_hz: float = 100e6,
    pit_repetitions: int = 100,
    comb_kwargs: Optional[dict] = None,
    cleaning_kwargs: Optional[dict] = None,
) -> PreparationResult:
    """Pit burning, comb burn-back and background cleaning, in that order."""
    centers = np.asarray(peak_centers_hz, dtype=float)
    mid = float(np.mean(centers))
    ens = init_ensemble(line, n_classes, sys, span_hz=span_hz, center_hz=mid)
    seqs = {
        "pit": pit_sequence(mid, pit_width_hz, sys, pit_repetitions),
        "comb": comb_sequence(centers, sys, **(comb_kwargs or {})),
        "cleaning": cleaning_sequence(centers, sys, **(cleaning_kwargs or {})),
    }
    pit = run_sequence(ens, seqs["pit"], sys)
    comb = run_sequence(pit, seqs["comb"], sys)
    cleaned = clean_background(comb, seqs["cleaning"], sys, comb_centers_hz=centers)
    return PreparationResult(pit, comb, cleaned, seqs)

