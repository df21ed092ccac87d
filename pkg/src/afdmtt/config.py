"""Flat ``key = value`` experiment files.

Blank lines and ``#`` comments are ignored. Unset keys take the defaults of
:meth:`SystemConfig.build` (1024 subcarriers, 30 kHz, 15 GHz, 72-sample
prefix and guard, 11 pilot symbols, 16 antennas, 5 paths, 300 km/h).

System keys (units)::

    M, N, N_frame, M_CPP, M_guard, M_region, m_pilot, N_BS, P, k_nu   integers
    delta_f (Hz), f_c (Hz), v_max_kmh (km/h), nu_max (Hz)              floats
    c1, c2, antenna_spacing (wavelengths), pilot_boost (linear)        floats
    qam_order                                                          4/16/64/256

Experiment keys::

    scenario    one of mse, nmse, ber, se, runtime, bounds
    snr         "a:b:step" (inclusive) or comma list, dB
    trials, seed, workers                                              integers
    out         output CSV path
    als_max_iter, als_tol, lobe_model                                  estimator knobs
"""
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .sweep import SCENARIOS
from .waveform import SystemConfig

SYSTEM_KEYS = {
    "M": int, "N": int, "N_frame": int, "M_CPP": int, "M_guard": int,
    "M_region": int, "m_pilot": int, "N_BS": int, "P": int, "k_nu": int,
    "delta_f": float, "f_c": float, "v_max_kmh": float, "nu_max": float,
    "c1": float, "c2": float, "antenna_spacing": float, "pilot_boost": float,
    "qam_order": int,
}
EXPERIMENT_KEYS = {
    "scenario": str, "snr": str, "trials": int, "seed": int, "workers": int,
    "out": str, "als_max_iter": int, "als_tol": float, "lobe_model": str,
}

PRESETS: Dict[str, Tuple[str, Dict[str, object]]] = {
    "param-mse-vs-snr": ("mse", {"M": 512, "M_CPP": 45}),
    "bounds-vs-snr": ("bounds", {"M": 512, "M_CPP": 45}),
    "nmse-vs-snr": ("nmse", {}),
    "ber-16qam": ("ber", {"qam_order": 16}),
    "ber-64qam": ("ber", {"qam_order": 64}),
    "ber-256qam": ("ber", {"qam_order": 256}),
    "se-vs-snr": ("se", {"M": 512, "N": 7, "N_frame": 13, "v_max_kmh": 500.0}),
    "runtime-vs-snr": ("runtime", {}),
    "nmse-vs-paths": ("nmse", {"M": 512, "M_CPP": 45}),
}


@dataclass
class ExperimentSpec:
    scenario: str = "nmse"
    overrides: Dict[str, object] = field(default_factory=dict)
    snr_grid: List[float] = field(default_factory=lambda: list(np.arange(0.0, 31.0, 5.0)))
    trials: int = 10
    master_seed: int = 0
    output: Optional[str] = None
    workers: int = 1
    als_max_iter: int = 100
    als_tol: float = 1e-8
    lobe_model: str = "dirichlet"
    cfg: SystemConfig = None

    def __post_init__(self):
        if self.cfg is None:
            self.cfg = build_config(self.overrides)
        self.validate()

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario {self.scenario!r}")
        if not self.snr_grid:
            raise ConfigError("snr", "empty SNR grid")
        if self.trials < 1:
            raise ConfigError("trials", "need at least one trial")
        if self.workers < 1:
            raise ConfigError("workers", "need at least one worker")

    def with_changes(self, **kw) -> "ExperimentSpec":
        data = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        data.update(kw)
        if "overrides" in kw:
            data["cfg"] = None
        return ExperimentSpec(**data)


def build_config(overrides: Dict[str, object]) -> SystemConfig:
    try:
        return SystemConfig.build(**overrides)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("config", str(exc)) from exc


def parse_snr(text: str) -> List[float]:
    """``"a:b:step"`` (inclusive of ``b``) or ``"x, y, z"``; ``inf`` allowed."""
    text = text.strip()
    try:
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            n = int(np.floor((b - a) / step + 1e-9)) + 1
            return [round(a + i * step, 10) for i in range(max(n, 0))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError("snr", str(exc)) from exc


def _convert(key, raw, kind):
    try:
        if kind is int:
            value = float(raw)
            if value != int(value):
                raise ValueError(f"expected an integer, got {raw!r}")
            return int(value)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from exc


def parse_config_text(text: str, base: Optional[Dict[str, object]] = None) -> ExperimentSpec:
    overrides: Dict[str, object] = dict(base or {})
    exp: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key in SYSTEM_KEYS:
            overrides[key] = _convert(key, raw, SYSTEM_KEYS[key])
        elif key in EXPERIMENT_KEYS:
            exp[key] = _convert(key, raw, EXPERIMENT_KEYS[key])
        else:
            raise ConfigError(key, "unknown key")
    kw = {"overrides": overrides}
    if "scenario" in exp:
        kw["scenario"] = exp["scenario"]
    if "snr" in exp:
        kw["snr_grid"] = parse_snr(exp["snr"])
    for src, dst in (("trials", "trials"), ("seed", "master_seed"), ("out", "output"),
                     ("workers", "workers"), ("als_max_iter", "als_max_iter"),
                     ("als_tol", "als_tol"), ("lobe_model", "lobe_model")):
        if src in exp:
            kw[dst] = exp[src]
    return ExperimentSpec(**kw)


def parse_config(path) -> ExperimentSpec:
    """Read an experiment file, or ``preset:NAME`` for a built-in preset."""
    path = str(path)
    if path.startswith("preset:"):
        name = path.split(":", 1)[1]
        if name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r}")
        scenario, overrides = PRESETS[name]
        spec = parse_config_text("", overrides)
        return spec.with_changes(scenario=scenario)
    p = Path(path)
    if not p.is_file():
        raise ConfigError("config", f"file not found: {path}")
    return parse_config_text(p.read_text())
