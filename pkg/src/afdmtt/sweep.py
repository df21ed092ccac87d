"""Monte-Carlo sweep driver.

Every trial draws its paths from ``default_rng([master_seed, trial])`` and
its noise from ``default_rng([master_seed, trial, snr_index])``, so records
depend only on the arguments and trials can run in any order or process.
"""
import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bounds import GROUPS, BoundInputs, evaluate_bounds
from .channel import PathRanges, awgn, build_staf_channel, effective_channels, sample_paths
from .cpals import estimate_from_cpd
from .estimator import estimate, reconstruct_channel
from .metrics import (align_paths, ber, empirical_sinr_db, lmmse_detect, nmse,
                      param_mse, pilot_overhead_afdm, qam_demod, qam_mod, se)
from .pilot import FrameLayout, PilotObservation, build_frame
from .waveform import SystemConfig

SCENARIOS = ("mse", "nmse", "ber", "se", "runtime", "bounds")


@dataclass(frozen=True)
class Scenario:
    """What to simulate and score.

    ``estimators`` is a subset of ``("tt", "cpals")``. ``link`` enables the
    data frame, LMMSE detection, BER and SE.
    """

    name: str
    cfg: SystemConfig
    estimators: Tuple[str, ...] = ("tt",)
    link: bool = False
    bounds: bool = False
    als_max_iter: int = 100
    als_tol: float = 1e-8
    lobe_model: str = "dirichlet"
    ranges: Optional[PathRanges] = None

    @classmethod
    def named(cls, name: str, cfg: SystemConfig, **kw) -> "Scenario":
        if name not in SCENARIOS:
            raise ValueError(f"unknown scenario {name!r}; choose from {SCENARIOS}")
        defaults = {
            "mse": dict(estimators=("tt",), bounds=True),
            "nmse": dict(estimators=("tt", "cpals")),
            "ber": dict(estimators=("tt",), link=True),
            "se": dict(estimators=("tt",), link=True),
            "runtime": dict(estimators=("tt", "cpals")),
            "bounds": dict(estimators=(), bounds=True),
        }[name]
        defaults.update(kw)
        return cls(name, cfg, **defaults)


@dataclass
class TrialRecord:
    """Scores of one (trial, SNR) cell. ``runtime`` is kept apart from
    ``metrics`` because wall-clock time is not reproducible."""

    seed: int
    trial: int
    snr_db: float
    config_digest: str
    metrics: Dict[str, float] = field(default_factory=dict)
    runtime: Dict[str, float] = field(default_factory=dict)
    failed: bool = False
    error: str = ""


def config_digest(cfg: SystemConfig) -> str:
    return hashlib.sha256(repr(cfg).encode()).hexdigest()[:12]


def _window_rows(cfg):
    return cfg.row_offset + np.arange(cfg.M_region)


def _score_estimate(prefix, est, paths, cfg, h_full, out):
    perm = align_paths(paths, est, cfg)
    for k in ("theta", "nu", "eta", "gain"):
        out[f"mse_{k}_{prefix}"] = param_mse(paths, est, perm, k, cfg)
    h_hat = reconstruct_channel(est, cfg, cfg.N, cfg.m_pilot)
    out[f"nmse_{prefix}"] = nmse(h_full, h_hat)


def _link(paths, est_paths, cfg, snr_db, rng, out, suffix):
    # full frame is assembled; BER and SE are scored on the data-only symbols
    # at an SNR defined on the received data block
    order = cfg.qam_order
    k = int(np.log2(order))
    layout = FrameLayout.from_config(cfg)
    bits = rng.integers(0, 2, size=layout.n_data * k)
    grid = build_frame(cfg, qam_mod(bits, order))
    n_sym = cfg.N_frame - cfg.N
    x = grid[cfg.N:]
    tail_bits = bits[-n_sym * cfg.M * k:]
    symbols = range(cfg.N, cfg.N_frame)
    h_true = effective_channels(paths, cfg, symbols)
    h_est = effective_channels(est_paths, cfg, symbols)
    clean = np.stack([h @ xi for h, xi in zip(h_true, x)])
    y, sigma2 = awgn(clean, snr_db, rng)
    x_perf = np.stack([lmmse_detect(yi, h, sigma2) for yi, h in zip(y, h_true)])
    x_est = np.stack([lmmse_detect(yi, h, sigma2) for yi, h in zip(y, h_est)])
    gamma = pilot_overhead_afdm(cfg.N, cfg.M_guard, cfg.N_frame, cfg.M)
    out["ber_perfect"] = ber(tail_bits, qam_demod(x_perf.ravel(), order))
    out[f"ber_{suffix}"] = ber(tail_bits, qam_demod(x_est.ravel(), order))
    out["se_perfect"] = se(empirical_sinr_db(x, x_perf), gamma)
    out[f"se_{suffix}"] = se(empirical_sinr_db(x, x_est), gamma)


def run_trial(scenario: Scenario, trial: int, snr_grid: Sequence[float],
              master_seed: int) -> List[TrialRecord]:
    """All SNR points of one trial (shared path draw, fresh noise per point)."""
    cfg = scenario.cfg
    digest = config_digest(cfg)
    records = []
    try:
        paths = sample_paths(np.random.default_rng([master_seed, trial]), cfg,
                             scenario.ranges)
    except Exception as exc:  # noqa: BLE001 - recorded and skipped
        return [TrialRecord(master_seed, trial, float(s), digest, failed=True,
                            error=f"{type(exc).__name__}: {exc}") for s in snr_grid]
    rows = _window_rows(cfg)
    h_full = build_staf_channel(paths, cfg, cfg.N, cfg.m_pilot)
    clean = cfg.pilot_value * h_full[:, :, rows]
    signal_power = float(np.mean(np.abs(clean) ** 2))
    for idx, snr in enumerate(snr_grid):
        rec = TrialRecord(master_seed, trial, float(snr), digest)
        rng = np.random.default_rng([master_seed, trial, idx])
        try:
            noisy, sigma2 = awgn(clean, snr, rng, signal_power)
            obs = PilotObservation(noisy, cfg.pilot_value, cfg.row_offset)
            for name in scenario.estimators:
                t0 = time.perf_counter()
                if name == "tt":
                    est = estimate(obs, cfg.P, cfg, scenario.lobe_model)
                else:
                    est = estimate_from_cpd(obs, cfg.P, cfg, scenario.als_max_iter,
                                            scenario.als_tol, rng, scenario.lobe_model)
                rec.runtime[name] = time.perf_counter() - t0
                _score_estimate(name, est, paths, cfg, h_full, rec.metrics)
                if scenario.link and name == "tt":
                    _link(paths, est.to_paths(cfg), cfg, snr, rng, rec.metrics, name)
            if scenario.bounds and sigma2 > 0:
                res = evaluate_bounds(BoundInputs.build(paths, cfg, sigma2))
                for k in GROUPS:
                    rec.metrics[f"crb_{k}"] = res.crb[k]
                    rec.metrics[f"zzb_{k}"] = res.zzb[k]
        except Exception as exc:  # noqa: BLE001 - failed trials do not stop the sweep
            rec.failed = True
            rec.error = f"{type(exc).__name__}: {exc}"
        records.append(rec)
    return records


def _run_trial_args(args):
    return run_trial(*args)


def run_sweep(scenario: Scenario, snr_grid: Sequence[float], n_trials: int,
              master_seed: int = 0, workers: int = 1) -> List[TrialRecord]:
    """Records ordered by (trial, SNR index); identical for any ``workers``."""
    jobs = [(scenario, t, list(snr_grid), master_seed) for t in range(n_trials)]
    if workers > 1 and n_trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_trial_args, jobs))
    else:
        chunks = [run_trial(*j) for j in jobs]
    return [r for chunk in chunks for r in chunk]
