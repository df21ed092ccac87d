"""Alternating least squares CP decomposition, used as the baseline estimator."""
import time
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .estimator import (EstimationResult, check_dimensions, estimate_aoa,
                        estimate_delay, estimate_doppler, estimate_gain,
                        reconstruct_channel)
from .pilot import PilotObservation
from .tensor import CPDFactors, cpd_construct
from .waveform import SystemConfig


@dataclass(frozen=True)
class ALSResult:
    factors: CPDFactors
    n_iter: int
    converged: bool
    rel_error: float


def _mttkrp(y, a, b, mode):
    # y contracted with the conjugates of the two other factors
    if mode == 0:
        return np.einsum("ijk,jr,kr->ir", y, a.conj(), b.conj())
    if mode == 1:
        return np.einsum("ijk,ir,kr->jr", y, a.conj(), b.conj())
    return np.einsum("ijk,ir,jr->kr", y, a.conj(), b.conj())


def cp_als(y: np.ndarray, P: int, max_iter: int = 100, tol: float = 1e-8,
           rng: Optional[np.random.Generator] = None) -> ALSResult:
    """Rank-``P`` CPD of a complex 3-way tensor by alternating least squares.

    Factors start from complex Gaussian draws. Iteration stops when the
    relative reconstruction error changes by less than ``tol`` or after
    ``max_iter`` sweeps; the iterate with the lowest error is returned.
    """
    rng = np.random.default_rng() if rng is None else rng
    y = np.asarray(y, dtype=complex)
    norm_y = np.linalg.norm(y)
    f = [rng.standard_normal((d, P)) + 1j * rng.standard_normal((d, P))
         for d in y.shape]
    prev = np.inf
    best = (np.inf, None)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        for mode in range(3):
            o1, o2 = [f[k] for k in range(3) if k != mode]
            gram = (o1.conj().T @ o1) * (o2.conj().T @ o2)
            rhs = _mttkrp(y, o1, o2, mode)
            f[mode] = np.linalg.lstsq(gram, rhs.T, rcond=None)[0].T
        err = np.linalg.norm(y - np.einsum("ir,jr,kr->ijk", *f)) / max(norm_y, 1e-300)
        if err < best[0]:
            best = (err, [x.copy() for x in f])
        if abs(prev - err) < tol:
            converged = True
            break
        prev = err
    f = best[1]
    weights = np.ones(P, dtype=complex)
    for k in range(3):
        n = np.linalg.norm(f[k], axis=0)
        n[n == 0] = 1
        f[k] = f[k] / n
        weights = weights * n
    return ALSResult(CPDFactors(weights, tuple(f)), it, converged, float(best[0]))


def estimate_from_cpd(obs: PilotObservation, P: int, cfg: SystemConfig,
                      max_iter: int = 100, tol: float = 1e-8,
                      rng: Optional[np.random.Generator] = None,
                      lobe_model: str = "dirichlet") -> EstimationResult:
    """Baseline estimator: CP-ALS factors followed by the same parameter readout.

    The spatial generator of each column is its lag-1 phase; Doppler, delay
    and gain use the same formulas as the TT estimator, with the CP
    reconstruction in place of the TT chain contraction.
    """
    t0 = time.perf_counter()
    y = np.asarray(obs.y_hat, dtype=complex)
    check_dimensions(y.shape, P)
    warnings: List[str] = []
    res = cp_als(y, P, max_iter, tol, rng)
    a1, a2, a3 = res.factors.factors
    lag = np.sum(np.conj(a1[:-1]) * a1[1:], axis=0)
    z = lag / np.maximum(np.abs(lag), 1e-300)
    theta = estimate_aoa(z, cfg.antenna_spacing, warnings)
    nu = estimate_doppler(a2, cfg.T_sym)
    a3w = a3 * res.factors.weights
    eta, _ = estimate_delay(a3w, nu, cfg, obs.row_offset, lobe_model, warnings)
    gains = estimate_gain(theta, nu, eta, cpd_construct(res.factors), cfg,
                          obs.pilot_value, obs.row_offset)
    est = EstimationResult(theta, nu, eta, gains, (a1, a2, a3w), None)
    est.channel_hat = reconstruct_channel(est, cfg, y.shape[1], cfg.m_pilot, obs.rows)
    resid = np.linalg.norm(y - obs.pilot_value * est.channel_hat) / max(np.linalg.norm(y), 1e-300)
    est.diagnostics = {
        "residual": float(resid),
        "runtime_s": time.perf_counter() - t0,
        "n_iter": res.n_iter,
        "converged": res.converged,
        "fit_error": res.rel_error,
        "warnings": warnings,
    }
    return est
