"""Command-line front end.

``afcmem --experiment store --out run1`` runs one experiment with the
default configuration; ``--config file.ini`` overrides any key. Each run
writes its data files plus ``summary.json`` into the output directory.

Exit codes: 0 success, 2 invalid input, 3 numerical precondition violated.
"""

from __future__ import annotations

import argparse
import sys
import time
import warnings
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from . import io
from .cavity import (
    CavitySpec,
    best_position_scan,
    dispersive_mode_structure,
    empty_fsr,
    impedance_matched_r1,
    reflection_scan,
    tune_length,
)
from .config import EXPERIMENTS, default_config, dump_config, load_config
from .errors import InvalidArgumentError, NumericalPreconditionError
from .pulses import GaussianPulseSpec, TimeGrid, gaussian_waveform, to_spectrum
from .pumping import (
    HyperfineSystem,
    calibrate_d_scale,
    ensemble_absorption,
    init_ensemble,
    placeholder_system,
    prepare_afc,
)
from .spectral import (
    CombSpec,
    InhomogeneousLine,
    carve_pit,
    comb_optical_depth,
    group_index,
    inhomogeneous_depth,
    kramers_kronig_index,
    make_grid,
)
from .storage import (
    AfcParams,
    analytic_afc_efficiency,
    comb_mean_depth,
    optimize_finesse,
    simulate_cavity_storage,
    simulate_single_pass_storage,
    storage_time_grid,
)

Config = dict[str, dict[str, Any]]


# builders


def _comb(cfg: Config) -> CombSpec:
    c = cfg["comb"]
    return CombSpec(
        n_peaks=c["n_peaks"],
        delta_hz=c["delta_hz"],
        gamma_fwhm_hz=c["gamma_fwhm_hz"],
        peak_d=c["peak_d"],
        background_d0=c["background_d0"],
        shape=c["shape"],
        center_hz=c["center_hz"],
    )


def _line(cfg: Config) -> InhomogeneousLine:
    s = cfg["line"]
    return InhomogeneousLine(s["center_hz"], s["fwhm_hz"], s["center_d"])


def _grid(cfg: Config):
    g = cfg["grid"]
    return make_grid(g["center_hz"], g["span_hz"], g["n_points"])


def _cavity(cfg: Config, r1_power: Optional[float] = None) -> CavitySpec:
    c, o = cfg["cavity"], cfg["optics"]
    return CavitySpec(
        length_m=o["length_m"],
        r1_power=c["r1_power"] if r1_power is None else r1_power,
        r2_power=c["r2_power"],
        n_bg=o["n_bg"],
        mode_coupling=c["mode_coupling"],
        r1_loss=c["r1_loss"],
        r2_loss=c["r2_loss"],
    )


def _pulse(cfg: Config, tg: TimeGrid):
    p = cfg["pulse"]
    spec = GaussianPulseSpec(p["t_fwhm_s"], 0.0, p["carrier_offset_hz"], p["amplitude"])
    return gaussian_waveform(spec, tg)


def _pulse_grid(cfg: Config, default: Callable[[], TimeGrid]) -> TimeGrid:
    p = cfg["pulse"]
    if p["dt_s"] > 0 and p["n_samples"] > 0:
        return TimeGrid(p["dt_s"], p["n_samples"], -p["n_samples"] * p["dt_s"] / 8)
    if p["dt_s"] > 0 or p["n_samples"] > 0:
        raise InvalidArgumentError("[pulse] dt_s and n_samples must be given together")
    return default()


def _system(cfg: Config) -> HyperfineSystem:
    p = cfg["pump"]
    base = placeholder_system()
    return HyperfineSystem(
        ground_splittings_hz=(p["ground_split_1_hz"], p["ground_split_2_hz"]),
        excited_splittings_hz=(p["excited_split_1_hz"], p["excited_split_2_hz"]),
        branching=base.branching,
        rel_strength=base.rel_strength,
        t1_s=p["t1_s"],
        min_wait_t1=p["min_wait_t1"],
    )


# experiments; each returns (metrics, files written)


def run_comb(cfg: Config, out: Path):
    comb = _comb(cfg)
    spec = comb_optical_depth(comb, _grid(cfg))
    files = [io.write_spectrum_csv(out / "spectrum.csv", spec.grid, d=spec.d_of_nu)]
    metrics = {
        "finesse": comb.finesse,
        "peak_centers_hz": [float(c) for c in comb.peak_centers_hz],
        "mean_depth": comb_mean_depth(comb),
        "max_depth": float(spec.d_of_nu.max()),
    }
    return metrics, files


def run_kk(cfg: Config, out: Path):
    o, pit = cfg["optics"], cfg["pit"]
    grid = _grid(cfg)
    spec = carve_pit(inhomogeneous_depth(_line(cfg), grid), pit["center_hz"], pit["width_hz"], pit["residual_d"])
    idx = kramers_kronig_index(
        spec, o["nu0_hz"], o["n_bg"], o["length_m"], cfg["kk"]["pad_factor"], cfg["kk"]["taper_fraction"]
    )
    ng = group_index(idx)
    files = [io.write_spectrum_csv(out / "spectrum.csv", grid, d=spec.d_of_nu, delta_n=idx.delta_n, n_g=ng)]
    i0 = int(np.argmin(np.abs(grid.nu - pit["center_hz"])))
    cav = tune_length(_cavity(cfg), float(idx.nu_abs[i0]), float(idx.n_r[i0]))
    modes = dispersive_mode_structure(idx, cav, spec)
    files.append(io.write_modes_csv(out / "modes.csv", modes))
    slope = float(ng[i0] - idx.n_r[i0])
    near = min(modes, key=lambda m: abs(m.nu_res_hz - pit["center_hz"]), default=None)
    metrics = {
        "n_r_at_pit": float(idx.n_r[i0]),
        "n_g_at_pit": float(ng[i0]),
        "nu_dn_dnu_at_pit": slope,
        "dispersion_ratio": slope / float(idx.n_r[i0]),
        "empty_fsr_hz": empty_fsr(cav),
        "local_fsr_at_pit_hz": None if near is None else near.local_fsr_hz,
        "n_modes": len(modes),
    }
    return metrics, files


def run_cavity_scan(cfg: Config, out: Path):
    s, o = cfg["scan"], cfg["optics"]
    cav = _cavity(cfg)
    line = _line(cfg)
    tg = _pulse_grid(cfg, lambda: TimeGrid(20e-9, 1024, -512 * 20e-9))
    probe = _pulse(cfg, tg)
    offsets = np.linspace(s["offset_start_hz"], s["offset_stop_hz"], s["n_offsets"])
    if s["positions"] > 1:
        scan = best_position_scan(line, cav, probe, offsets, o["nu0_hz"], s["positions"])
    else:
        scan = reflection_scan(line, cav, probe, offsets, o["nu0_hz"])
    off, val = scan.minimum
    files = [io.write_scan_csv(out / "scan.csv", scan)]
    metrics = {
        "min_reflected_fraction": float(val),
        "min_offset_hz": float(off),
        "empty_fsr_hz": empty_fsr(cav),
        "length_m": scan.cavity.length_m if scan.cavity is not None else cav.length_m,
    }
    return metrics, files


def _store_inputs(cfg: Config):
    comb = _comb(cfg)
    tg = _pulse_grid(
        cfg,
        lambda: storage_time_grid(comb.delta_hz, comb.gamma_fwhm_hz, cfg["pulse"]["t_fwhm_s"], comb.extent_hz[1] - comb.extent_hz[0]),
    )
    return comb, _pulse(cfg, tg)


def _echo_files(out: Path, pulse, echo):
    return [
        io.write_trace_csv(out / "input.csv", pulse),
        io.write_trace_csv(out / "output.csv", echo),
        io.write_intensity_csv(out / "echo_intensity.csv", echo),
        io.write_spectrum_trace_csv(out / "input_spectrum.csv", to_spectrum(pulse)),
    ]


def run_store(cfg: Config, out: Path):
    o = cfg["optics"]
    comb, pulse = _store_inputs(cfg)
    echo, m = simulate_single_pass_storage(pulse, comb, o["length_m"], o["nu0_hz"], o["n_bg"])
    files = _echo_files(out, pulse, echo) + [io.write_json(out / "metrics.json", m.to_dict())]
    metrics = m.to_dict()
    metrics["analytic_efficiency"] = analytic_afc_efficiency(
        AfcParams(comb.peak_d, comb.background_d0, comb.finesse)
    )
    return metrics, files


def run_store_cavity(cfg: Config, out: Path):
    o = cfg["optics"]
    comb, pulse = _store_inputs(cfg)
    d_avg = comb_mean_depth(comb)
    r1 = impedance_matched_r1(d_avg) if cfg["cavity"]["match_r1"] else None
    cav = _cavity(cfg, r1)
    echo, m = simulate_cavity_storage(pulse, comb, cav, o["nu0_hz"], align=cfg["cavity"]["align"])
    _, m_free = simulate_single_pass_storage(pulse, comb, o["length_m"], o["nu0_hz"], o["n_bg"])
    files = _echo_files(out, pulse, echo) + [io.write_json(out / "metrics.json", m.to_dict())]
    metrics = m.to_dict()
    metrics.update(
        {
            "r1_power": cav.r1_power,
            "mean_single_pass_depth": d_avg,
            "single_pass_absorption": 1 - float(np.exp(-d_avg)),
            "free_space_efficiency": m_free.efficiency,
        }
    )
    return metrics, files


def run_optimize(cfg: Config, out: Path):
    p = cfg["optimize"]
    F_best, eta = optimize_finesse(p["d"], p["d0"], (p["finesse_min"], p["finesse_max"]), p["tolerance"])
    F = np.linspace(p["finesse_min"], p["finesse_max"], 500)
    eta_F = [analytic_afc_efficiency(AfcParams(p["d"], p["d0"], f)) for f in F]
    path = out / "efficiency_vs_finesse.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack([F, eta_F]), fmt=io.FMT, delimiter=",", header="finesse,efficiency", comments="")
    metrics = {"optimal_finesse": F_best, "optimal_efficiency": eta, "d_eff": AfcParams(p["d"], p["d0"], F_best).d_eff}
    return metrics, [path]


def run_pump(cfg: Config, out: Path):
    p, o = cfg["pump"], cfg["optics"]
    sys_ = _system(cfg)
    n = p["n_peaks"]
    centers = (np.arange(n) - (n - 1) / 2) * p["delta_hz"] + cfg["comb"]["center_hz"]
    line = InhomogeneousLine(float(np.mean(centers)), cfg["line"]["fwhm_hz"], p["line_d"])
    comb_kw = dict(
        f_width_hz=p["comb_f_width_hz"],
        t_fwhm_s=p["comb_t_fwhm_s"],
        repetitions=p["repetitions"],
        wait_s=p["wait_s"],
        p=p["p"],
    )
    clean_kw = dict(
        f_width_hz=p["clean_f_width_hz"],
        t_fwhm_s=p["clean_t_fwhm_s"],
        repetitions=p["repetitions"],
        wait_s=p["wait_s"],
        margin_hz=p["clean_margin_hz"],
        p=p["p"],
    )
    prep = prepare_afc(
        sys_, centers, line, p["pit_width_hz"], p["n_classes"], p["class_span_hz"], p["pit_repetitions"], comb_kw, clean_kw
    )
    tg = TimeGrid(p["dt_s"], p["n_samples"], -p["n_samples"] * p["dt_s"] / 8)
    pulse = _pulse(cfg, tg)
    grid = to_spectrum(pulse).grid
    mid = float(np.mean(centers))
    ref = init_ensemble(line, p["n_classes"], sys_, span_hz=p["class_span_hz"], center_hz=mid)
    scale = calibrate_d_scale(ref, sys_, p["line_d"], grid, mid, p["hom_fwhm_hz"])
    absorption = ensemble_absorption(prep.cleaned, grid, sys_, scale, p["hom_fwhm_hz"])
    echo, m = simulate_single_pass_storage(pulse, absorption, o["length_m"], o["nu0_hz"], o["n_bg"], delta_hz=p["delta_hz"])
    files = [
        io.write_ensemble_csv(out / "ensemble.csv", prep.cleaned),
        io.write_spectrum_csv(out / "spectrum.csv", grid, d=absorption.d_of_nu),
        *_echo_files(out, pulse, echo),
        io.write_json(out / "metrics.json", m.to_dict()),
    ]
    metrics = m.to_dict()
    metrics["peak_centers_hz"] = [float(c) for c in centers]
    metrics["d_scale"] = scale
    return metrics, files


RUNNERS = {
    "comb": run_comb,
    "kk": run_kk,
    "cavity-scan": run_cavity_scan,
    "store": run_store,
    "store-cavity": run_store_cavity,
    "optimize": run_optimize,
    "pump": run_pump,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def run(cfg: Config, out: Path, quiet: bool = False) -> dict:
    """Run the configured experiment, write artifacts and return the summary."""
    exp = cfg["run"]["experiment"]
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    metrics, files = RUNNERS[exp](cfg, out)
    elapsed = time.perf_counter() - t0
    (out / "config.ini").write_text(dump_config(cfg))
    summary = {
        "experiment": exp,
        "version": __version__,
        "inputs": cfg,
        "metrics": metrics,
        "files": sorted(Path(f).name for f in files) + ["config.ini"],
    }
    io.write_json(out / "summary.json", _jsonable(summary))
    if not quiet:
        print(f"{exp}: wrote {len(files) + 2} files to {out} in {elapsed:.2f} s")
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="afcmem", description="Cavity-enhanced atomic frequency comb simulations.")
    ap.add_argument("--config", type=Path, help="INI configuration file")
    ap.add_argument("--out", type=Path, help="output directory (overrides [run] output_dir)")
    ap.add_argument("--experiment", choices=EXPERIMENTS, help="experiment to run (overrides [run] experiment)")
    ap.add_argument("--quiet", action="store_true", help="suppress progress output and warnings")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            if args.quiet:
                warnings.simplefilter("ignore")
            cfg = load_config(args.config, args.experiment) if args.config else default_config(args.experiment or "store")
            out = args.out if args.out is not None else Path(cfg["run"]["output_dir"])
            run(cfg, out, args.quiet)
    except NumericalPreconditionError as exc:
        print(f"error: numerical precondition violated: {exc}", file=sys.stderr)
        return 3
    except (InvalidArgumentError, ValueError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
