"""CSV and JSON serialisation of spectra, traces, scans, modes and ensembles.

All numbers are written with 17 significant digits so files re-load exactly
and identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .cavity import Resonance, ScanResult
from .errors import InvalidArgumentError
from .pulses import SpectrumTrace, TimeGrid, TimeTrace
from .pumping import IonClassEnsemble
from .spectral import AbsorptionSpectrum, ComplexIndex, FrequencyGrid
from .storage import EchoMetrics

FMT = "%.17g"


def _write(path, header: list[str], columns: list[np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(header), comments="")
    return path


def _read(path) -> dict[str, np.ndarray]:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise InvalidArgumentError(f"{path}: {data.shape[1]} columns but header has {len(header)}")
    return {name: data[:, i] for i, name in enumerate(header)}


def grid_from_samples(nu: np.ndarray) -> FrequencyGrid:
    n = nu.size
    dnu = (nu[-1] - nu[0]) / (n - 1)
    span = n * dnu
    return FrequencyGrid(float(nu[0] + span / 2), float(span), n)


def time_grid_from_samples(t: np.ndarray) -> TimeGrid:
    n = t.size
    return TimeGrid(float((t[-1] - t[0]) / (n - 1)), n, float(t[0]))


# spectra


def write_spectrum_csv(path, grid: FrequencyGrid, d=None, delta_n=None, n_g=None) -> Path:
    header, cols = ["nu_hz"], [grid.nu]
    for name, col in (("d", d), ("delta_n", delta_n), ("n_g", n_g)):
        if col is not None:
            header.append(name)
            cols.append(col)
    return _write(path, header, cols)


def read_spectrum_csv(path) -> tuple[FrequencyGrid, dict[str, np.ndarray]]:
    cols = _read(path)
    if "nu_hz" not in cols:
        raise InvalidArgumentError(f"{path}: missing nu_hz column")
    return grid_from_samples(cols.pop("nu_hz")), cols


def load_absorption_csv(path, min_feature_hz: Optional[float] = None) -> AbsorptionSpectrum:
    grid, cols = read_spectrum_csv(path)
    return AbsorptionSpectrum(grid, cols["d"], min_feature_hz)


def load_index_csv(path, n_bg: float, nu0_hz: float) -> ComplexIndex:
    grid, cols = read_spectrum_csv(path)
    return ComplexIndex(grid, cols["delta_n"], n_bg=n_bg, nu0_hz=nu0_hz)


# traces


def write_trace_csv(path, trace: TimeTrace) -> Path:
    return _write(path, ["t_s", "re", "im"], [trace.t, trace.samples.real, trace.samples.imag])


def write_spectrum_trace_csv(path, spec: SpectrumTrace) -> Path:
    return _write(path, ["nu_hz", "re", "im"], [spec.nu, spec.samples.real, spec.samples.imag])


def write_intensity_csv(path, trace: TimeTrace) -> Path:
    return _write(path, ["t_s", "intensity"], [trace.t, trace.intensity])


def read_trace_csv(path):
    """Load any trace file; ``t_s,intensity`` files come back with real amplitudes."""
    cols = _read(path)
    if "t_s" in cols:
        tg = time_grid_from_samples(cols["t_s"])
        if "intensity" in cols:
            return TimeTrace(tg, np.sqrt(np.clip(cols["intensity"], 0, None)))
        return TimeTrace(tg, cols["re"] + 1j * cols["im"])
    if "nu_hz" in cols:
        return SpectrumTrace(grid_from_samples(cols["nu_hz"]), cols["re"] + 1j * cols["im"])
    raise InvalidArgumentError(f"{path}: not a trace file")


# cavity


def write_scan_csv(path, scan: ScanResult) -> Path:
    return _write(path, ["offset_hz", "reflected_fraction"], [scan.offsets_hz, scan.reflected_fraction])


def read_scan_csv(path) -> ScanResult:
    cols = _read(path)
    return ScanResult(cols["offset_hz"], cols["reflected_fraction"], None)


def write_modes_csv(path, modes: list[Resonance]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write("nu_res_hz,local_fsr_hz\n")
        for m in modes:
            fh.write(f"{FMT % m.nu_res_hz},{FMT % m.local_fsr_hz}\n")
    return path


def read_modes_csv(path) -> list[Resonance]:
    with open(path) as fh:
        lines = fh.read().splitlines()[1:]
    out = []
    for line in lines:
        nu, fsr = (float(v) for v in line.split(","))
        out.append(Resonance(nu, fsr, float("nan")))
    return out


# pumping


def write_ensemble_csv(path, ens: IonClassEnsemble) -> Path:
    g = ens.ground
    return _write(path, ["detuning_hz", "pop_g1", "pop_g2", "pop_g3"], [ens.detuning_hz, g[:, 0], g[:, 1], g[:, 2]])


def read_ensemble_csv(path) -> IonClassEnsemble:
    cols = _read(path)
    pops = np.zeros((cols["detuning_hz"].size, 6))
    for i in range(3):
        pops[:, i] = cols[f"pop_g{i + 1}"]
    return IonClassEnsemble(cols["detuning_hz"], pops)


# metrics


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def read_metrics_json(path) -> EchoMetrics:
    raw = json.loads(Path(path).read_text())
    return EchoMetrics(
        raw["t_echo_s"],
        raw["efficiency"],
        tuple(raw["window"]),
        raw["echo_peak_time_s"],
        list(raw.get("secondary_echoes", [])),
        raw.get("transmitted_efficiency"),
    )
