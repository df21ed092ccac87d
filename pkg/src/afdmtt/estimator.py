"""Tensor-train channel estimator.

The received pilot window is a rank-P tensor whose three factor matrices are
structured: the spatial factor is Vandermonde in ``exp(j2*pi*d*cos(theta))``,
the temporal factor is Vandermonde in ``exp(j2*pi*nu*T_sym)`` and each column
of the affine-frequency factor is a shifted Dirichlet kernel. The estimator

1. computes a rank-P TT-SVD (head, core, tail),
2. finds the spatial generators from the head by ESPRIT,
3. peels the temporal factor off the core, one rank-1 fit per path,
4. forms the affine-frequency factor from the tail,
5. reads angle, Doppler, delay and gain from the recovered factors.

Path ordering is fixed by step 2 and carried through every later step, so
the per-path outputs are consistently paired. There is no iteration.
"""
import time
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .channel import (PathParams, PathSet, build_staf_channel, doppler_vector,
                      h_entry, steering_vector)
from .errors import (DimensionError, IdentifiabilityError, SingularGainError)
from .pilot import PilotObservation
from .tensor import TTCores, best_rank1, khatri_rao, pinv, rank_by_gap, tt_svd, unfold
from .waveform import SystemConfig

LOBE_MODELS = ("linear", "dirichlet")


@dataclass
class EstimationResult:
    """Per-path estimates in a common (paired) order, plus diagnostics."""

    theta: np.ndarray
    nu: np.ndarray
    eta: np.ndarray
    alpha_tilde: np.ndarray
    factors: Tuple[np.ndarray, np.ndarray, np.ndarray]
    channel_hat: np.ndarray
    diagnostics: Dict = field(default_factory=dict)

    @property
    def P(self) -> int:
        return len(self.theta)

    def to_paths(self, cfg: SystemConfig) -> PathSet:
        """Physical path set whose ``alpha_tilde`` equals the estimate."""
        out = []
        for th, nu, eta, at in zip(self.theta, self.nu, self.eta, self.alpha_tilde):
            back = np.exp(-2j * np.pi * nu * (cfg.M_CPP - eta) * cfg.T_s)
            out.append(PathParams(float(th), float(nu), float(eta), complex(at * back)))
        return PathSet(out)


def esprit_generators(g1: np.ndarray, rank_tol: float = 1e-10,
                      sep_tol: float = 1e-8):
    """Rotational-invariance generators of a Vandermonde column space.

    Parameters
    ----------
    g1 : (X, P) array
        Basis of the column space of a Vandermonde matrix (any basis).

    Returns
    -------
    z : (P,) complex array
        Generators normalised to unit modulus.
    m1 : (P, P) complex array
        Eigenvectors, ``g1 @ m1`` is proportional to the Vandermonde factor.
    """
    g1 = np.asarray(g1, dtype=complex)
    X, P = g1.shape
    if X < P + 1:
        raise IdentifiabilityError(f"{X} rows cannot resolve {P} generators")
    s = np.linalg.svd(g1[:-1], compute_uv=False)
    if s[-1] <= rank_tol * s[0]:
        raise IdentifiabilityError("head matrix is rank deficient")
    psi = pinv(g1[:-1]) @ g1[1:]
    vals, vecs = np.linalg.eig(psi)
    if P > 1:
        d = np.abs(vals[:, None] - vals[None, :])
        np.fill_diagonal(d, np.inf)
        if d.min() < sep_tol:
            raise IdentifiabilityError("repeated generators")
    z = vals / np.abs(vals)
    return z, vecs


def recover_A1(generators, N_BS: int) -> np.ndarray:
    """Vandermonde matrix ``[1, z, ..., z**(N_BS-1)]`` per column."""
    z = np.asarray(generators, dtype=complex)
    return z[None, :] ** np.arange(N_BS)[:, None]


def recover_A2_M2(g1, g2_core, A1_hat, residual_tol: float = 0.1):
    """Temporal factor and the tail mixing matrix from head and core.

    Row ``r`` of ``pinv(A1_hat) @ g1 @ unfold(core, 1)`` reshapes to the
    ``N x P`` rank-1 matrix ``outer(a2_r, m_r)``. Its best rank-1 fit gives
    the temporal column ``a2_r`` (first entry 1) and column ``r`` of the
    tail mixing matrix.

    Returns
    -------
    A2_hat, M2_invT_hat : arrays of shape (N, P) and (P, P)
    worst_residual : float
        Largest relative rank-1 residual over the rows.
    """
    P, N, P2 = g2_core.shape
    prod = pinv(A1_hat) @ g1 @ unfold(g2_core, 1)
    A2 = np.empty((N, prod.shape[0]), dtype=complex)
    M2 = np.empty((P2, prod.shape[0]), dtype=complex)
    worst = 0.0
    for r, row in enumerate(prod):
        mat = row.reshape(N, P2, order="F")
        u, v = best_rank1(mat)
        A2[:, r], M2[:, r] = u, v
        res = np.linalg.norm(mat - np.outer(u, v)) / max(np.linalg.norm(mat), 1e-300)
        worst = max(worst, float(res))
    return A2, M2, worst


def recover_A3(g3: np.ndarray, M2_invT_hat: np.ndarray) -> np.ndarray:
    """Affine-frequency factor (with path gains folded into the columns)."""
    return g3.T @ M2_invT_hat


def estimate_aoa(generators, spacing: float, warnings: List[str] = None) -> np.ndarray:
    """Arrival angle from the spatial generator phase."""
    arg = np.angle(generators) / (2 * np.pi * spacing)
    if np.any(np.abs(arg) > 1) and warnings is not None:
        warnings.append("aoa: generator phase outside the visible region, clipped")
    return np.arccos(np.clip(arg, -1.0, 1.0))


def estimate_doppler(A2_hat: np.ndarray, T_sym: float) -> np.ndarray:
    """Lag-1 phase of each unit-modulus-normalised temporal column."""
    A2_hat = np.asarray(A2_hat, dtype=complex)
    mag = np.abs(A2_hat)
    unit = np.divide(A2_hat, mag, out=np.ones_like(A2_hat), where=mag > 0)
    lag = np.sum(np.conj(unit[:-1]) * unit[1:], axis=0)
    return np.angle(lag) / (2 * np.pi * T_sym)


def _lobe_offset(r, far_side, M, lobe_model):
    """Distance from the main-lobe bin toward the true peak, in bins.

    ``r`` is the neighbour-to-main magnitude ratio. With the neighbour on the
    near side the sinc model gives ``r/(1+r)``; on the far side ``r/(1-r)``.
    """
    if lobe_model == "linear":
        return r / (1 - r) if far_side else r / (1 + r)
    s, c = np.sin(np.pi / M), np.cos(np.pi / M)
    den = 1 - r * c if far_side else 1 + r * c
    return (M / np.pi) * np.arctan2(r * s, den)


def _real_profile(col, rows, cfg):
    # strip the bin-dependent phases so the column is a common phase times
    # a real sinc ratio; the sign of neighbour/main tells which side the
    # peak is on
    M = cfg.M
    return col * np.exp(2j * np.pi * cfg.c2 * rows.astype(float) ** 2
                        + 1j * np.pi * rows * (M - 1) / M)


def estimate_delay(A3_hat, nu_hat, cfg: SystemConfig, row_offset: int = None,
                   lobe_model: str = "dirichlet", warnings: List[str] = None):
    """Delay tap from the main lobe and its larger neighbour.

    The fractional peak position is ``m + dm`` with ``m`` the absolute bin of
    the largest entry and ``dm`` taken from the magnitude ratio of the larger
    neighbour. ``lobe_model="linear"`` uses the small-angle sinc
    approximation, ``"dirichlet"`` inverts the finite-``M`` kernel exactly.
    At a window edge only one neighbour exists; its signed ratio after
    removing the known phase ramp decides the side.

    Returns
    -------
    eta : (P,) array
    main_rows : (P,) int array of window rows holding each main lobe
    """
    if lobe_model not in LOBE_MODELS:
        raise ValueError(f"lobe_model must be one of {LOBE_MODELS}")
    warnings = [] if warnings is None else warnings
    row_offset = cfg.row_offset if row_offset is None else row_offset
    A3_hat = np.asarray(A3_hat, dtype=complex)
    R, P = A3_hat.shape
    rows = row_offset + np.arange(R)
    eta = np.empty(P)
    main_rows = np.empty(P, dtype=int)
    for r in range(P):
        col = A3_hat[:, r]
        mag = np.abs(col)
        k = int(np.argmax(mag))
        main_rows[r] = k
        peak = mag[k]
        nbrs = [j for j in (k - 1, k + 1) if 0 <= j < R]
        if max(mag[j] for j in nbrs) <= 1e-12 * peak:
            dm = 0.0
        elif len(nbrs) == 2:
            j = k - 1 if mag[k - 1] >= mag[k + 1] else k + 1
            dm = (j - k) * _lobe_offset(mag[j] / peak, False, cfg.M, lobe_model)
        else:
            j = nbrs[0]
            warnings.append(f"delay: path {r} main lobe at window edge")
            prof = _real_profile(col[[k, j]], rows[[k, j]], cfg)
            same_side = np.real(prof[1] * np.conj(prof[0])) > 0
            ratio = mag[j] / peak
            if same_side:
                dm = (j - k) * _lobe_offset(ratio, False, cfg.M, lobe_model)
            else:
                ratio = min(ratio, 0.999)
                dm = (k - j) * _lobe_offset(ratio, True, cfg.M, lobe_model)
        m_loc = rows[k] + dm
        eta[r] = (cfg.m_pilot + nu_hat[r] * cfg.T - m_loc) / (2 * cfg.M * cfg.c1)
    if np.any(eta < 0):
        warnings.append("delay: negative estimate clipped to zero")
        eta = np.maximum(eta, 0.0)
    return eta, main_rows


def estimate_gain(theta_hat, nu_hat, eta_hat, cores, cfg: SystemConfig,
                  pilot_value: complex = 1.0, row_offset: int = None) -> np.ndarray:
    """Path gains from a low-rank reconstruction and rebuilt spatial/temporal factors.

    The affine-frequency factor with gains is
    ``unfold(Z, 3) @ pinv(khatri_rao(A2, A1)).T`` with ``Z`` the TT chain
    contraction (or any full tensor passed instead of ``cores``). Each
    column's main-lobe entry divided by the modelled kernel value (and the
    pilot symbol) is the gain.
    """
    row_offset = cfg.row_offset if row_offset is None else row_offset
    z = cores.full() if isinstance(cores, TTCores) else np.asarray(cores)
    N_BS, N, R = z.shape
    A1 = np.stack([steering_vector(t, N_BS, cfg.antenna_spacing) for t in theta_hat], 1)
    A2 = np.stack([doppler_vector(v, N, cfg.T_sym) for v in nu_hat], 1)
    A3S = unfold(z, 3) @ pinv(khatri_rao(A2, A1)).T
    rows = row_offset + np.arange(R)
    gains = np.empty(len(theta_hat), dtype=complex)
    for r, (th, v, e) in enumerate(zip(theta_hat, nu_hat, eta_hat)):
        k = int(np.argmax(np.abs(A3S[:, r])))
        model = h_entry(rows[k], cfg.m_pilot, PathParams(th, v, e), cfg)
        if abs(model) < 1e-12:
            raise SingularGainError(f"model value vanishes for path {r}")
        gains[r] = A3S[k, r] / model / pilot_value
    return gains


def reconstruct_channel(est: EstimationResult, cfg: SystemConfig,
                        n_symbols: int = None, m_prime: int = None,
                        rows=None) -> np.ndarray:
    """STAF channel evaluated at the estimated parameters."""
    return build_staf_channel(est.to_paths(cfg), cfg, n_symbols, m_prime, rows)


def check_dimensions(shape, P):
    N_BS, N, R = shape
    if not (N_BS > P and N >= P and R >= P):
        raise DimensionError(
            f"window {shape} too small for {P} paths (need N_BS > P, N >= P, M_region >= P)")


def estimate(obs: PilotObservation, P: int, cfg: SystemConfig,
             lobe_model: str = "dirichlet") -> EstimationResult:
    """Run the full TT-SVD estimator on a received pilot window."""
    t0 = time.perf_counter()
    y = np.asarray(obs.y_hat, dtype=complex)
    check_dimensions(y.shape, P)
    warnings: List[str] = []
    cores = tt_svd(y, P)
    s1 = cores.singular_values[0]
    if s1[P - 1] <= 1e-12 * s1[0]:
        raise IdentifiabilityError(f"pilot window has rank below {P}")
    z, m1 = esprit_generators(cores.head)
    A1 = recover_A1(z, y.shape[0])
    A2, M2, worst = recover_A2_M2(cores.head, cores.core, A1)
    if worst > 0.1:
        warnings.append(f"core: rank-1 residual {worst:.3g} above 0.1")
    A3 = recover_A3(cores.tail, M2)
    theta = estimate_aoa(z, cfg.antenna_spacing, warnings)
    nu = estimate_doppler(A2, cfg.T_sym)
    eta, _ = estimate_delay(A3, nu, cfg, obs.row_offset, lobe_model, warnings)
    gains = estimate_gain(theta, nu, eta, cores, cfg, obs.pilot_value, obs.row_offset)
    est = EstimationResult(theta, nu, eta, gains, (A1, A2, A3), None)
    est.channel_hat = reconstruct_channel(est, cfg, y.shape[1], cfg.m_pilot, obs.rows)
    resid = np.linalg.norm(y - obs.pilot_value * est.channel_hat) / max(np.linalg.norm(y), 1e-300)
    est.diagnostics = {
        "residual": float(resid),
        "runtime_s": time.perf_counter() - t0,
        "n_iter": 0,
        "warnings": warnings,
        "singular_values": cores.singular_values,
        "rank_by_gap": rank_by_gap(s1),
        "rank1_residual": worst,
        "esprit_vectors": m1,
    }
    return est
