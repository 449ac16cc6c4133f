"""INI-style run configuration.

Every section and key is declared in ``SCHEMA``; anything else is rejected.
Physical quantities carry their unit in the key name (``_hz``, ``_s``, ``_m``).
Keys not given in the file take the defaults below. These describe a 2 mm
coated Pr:Y2SiO5 crystal, and a few grid and comb defaults depend on the
experiment (``EXPERIMENT_DEFAULTS``).
"""

from __future__ import annotations

import configparser
import copy
from pathlib import Path
from typing import Any, Optional

from .errors import InvalidArgumentError
from .spectral import C0

EXPERIMENTS = ("comb", "kk", "cavity-scan", "store", "store-cavity", "optimize", "pump")


class ConfigError(InvalidArgumentError):
    pass


# section -> key -> default (the default's type is the key's type)
SCHEMA: dict[str, dict[str, Any]] = {
    "run": {"experiment": "store", "output_dir": "out", "seed": 0},
    "optics": {"nu0_hz": C0 / 605.977e-9, "n_bg": 1.8, "length_m": 2e-3},
    "grid": {"center_hz": 0.0, "span_hz": 8e6, "n_points": 4096},
    "comb": {
        "n_peaks": 4,
        "delta_hz": 0.9e6,
        "gamma_fwhm_hz": 0.15e6,
        "peak_d": 3.0,
        "background_d0": 0.1,
        "shape": "gaussian",
        "center_hz": 0.0,
    },
    "line": {"center_hz": 0.0, "fwhm_hz": 10e9, "center_d": 9.1},
    "pit": {"center_hz": 0.0, "width_hz": 1e6, "residual_d": 0.0},
    "kk": {"pad_factor": 4, "taper_fraction": 0.05},
    "cavity": {
        "r1_power": 0.8,
        "r2_power": 0.997,
        "mode_coupling": 0.84,
        "r1_loss": 0.0,
        "r2_loss": 0.0,
        "match_r1": True,
        "align": True,
    },
    "pulse": {"t_fwhm_s": 250e-9, "carrier_offset_hz": 0.0, "amplitude": 1.0, "dt_s": 0.0, "n_samples": 0},
    "scan": {"offset_start_hz": -5e9, "offset_stop_hz": 95e9, "n_offsets": 201, "positions": 32},
    "optimize": {"d": 20.0, "d0": 0.0, "finesse_min": 1.01, "finesse_max": 100.0, "tolerance": 1e-3},
    "pump": {
        "n_peaks": 4,
        "delta_hz": 0.9e6,
        "line_d": 1.0,
        "pit_width_hz": 8e6,
        "n_classes": 20001,
        "class_span_hz": 100e6,
        "p": 0.95,
        "pit_repetitions": 100,
        "repetitions": 50,
        "wait_s": 500e-6,
        "comb_f_width_hz": 70e3,
        "comb_t_fwhm_s": 16.8e-6,
        "clean_f_width_hz": 300e3,
        "clean_t_fwhm_s": 20e-6,
        "clean_margin_hz": 100e3,
        "hom_fwhm_hz": 10e3,
        "t1_s": 164e-6,
        "min_wait_t1": 3.0,
        "ground_split_1_hz": 10.19e6,
        "ground_split_2_hz": 17.30e6,
        "excited_split_1_hz": 4.82e6,
        "excited_split_2_hz": 4.60e6,
        "dt_s": 50e-9,
        "n_samples": 32768,
    },
}

EXPERIMENT_DEFAULTS: dict[str, dict[str, dict[str, Any]]] = {
    "store-cavity": {
        "comb": {"n_peaks": 41, "delta_hz": 1e6, "gamma_fwhm_hz": 0.1e6, "peak_d": 0.99, "background_d0": 0.0},
        "pulse": {"t_fwhm_s": 100e-9},
    },
    "kk": {"grid": {"center_hz": 0.0, "span_hz": 100e9, "n_points": 1 << 20}, "line": {"center_d": 9.0}},
}


def _convert(section: str, key: str, raw: str, default: Any) -> Any:
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            v = float(raw)
            if v != int(v):
                raise ValueError(raw)
            return int(v)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {type(default).__name__}") from None


def default_config(experiment: str = "store") -> dict[str, dict[str, Any]]:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    cfg = copy.deepcopy(SCHEMA)
    for sec, vals in EXPERIMENT_DEFAULTS.get(experiment, {}).items():
        cfg[sec].update(vals)
    cfg["run"]["experiment"] = experiment
    return cfg


def parse_config(text: str, experiment: Optional[str] = None) -> dict[str, dict[str, Any]]:
    """Parse INI text; ``experiment`` overrides ``[run] experiment``."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key in parser[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key [{sec}] {key}")
    exp = experiment or (parser["run"].get("experiment") if parser.has_section("run") else None) or "store"
    cfg = default_config(exp.strip())
    for sec in parser.sections():
        for key, raw in parser[sec].items():
            cfg[sec][key] = _convert(sec, key, raw, SCHEMA[sec][key])
    cfg["run"]["experiment"] = exp.strip()
    if cfg["run"]["seed"] < 0:
        raise ConfigError("[run] seed must be an unsigned integer")
    return cfg


def load_config(path, experiment: Optional[str] = None) -> dict[str, dict[str, Any]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, experiment)


def dump_config(cfg: dict[str, dict[str, Any]]) -> str:
    lines = []
    for sec, vals in cfg.items():
        lines.append(f"[{sec}]")
        for k, v in vals.items():
            lines.append(f"{k} = {str(v).lower() if isinstance(v, bool) else v!r}".replace("'", ""))
        lines.append("")
    return "\n".join(lines)
