"""Fisher information, Cramér-Rao bound and closed-form Ziv-Zakai bound.

The observation model behind all bounds is the vectorised pilot window
``y = Phi g + n`` with random circular Gaussian path gains
``g ~ CN(0, diag(powers))`` and white noise of variance ``sigma_n2``, so
``R = Phi diag(powers) Phi^H + sigma_n2 I``. Column ``i`` of ``Phi`` is the
signature ``a(theta_i) (x) b(nu_i) (x) c(nu_i, eta_i)`` (Kronecker product,
antenna index slowest), i.e. the row-major flattening of the rank-1 tensor.
Parameters are ordered ``[theta_1..P, nu_1..P, eta_1..P]``.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
from scipy.special import erfc, gammainc

from .channel import (PathParams, PathSet, build_staf_channel, dirichlet,
                      doppler_vector, steering_vector)
from .errors import ConditioningError
from .waveform import SystemConfig

GROUPS = ("theta", "nu", "eta")


@dataclass(frozen=True)
class BoundInputs:
    """Path set, per-path powers, noise variance and uniform prior widths."""

    paths: PathSet
    powers: np.ndarray
    sigma_n2: float
    priors: Dict[str, float]
    cfg: SystemConfig

    def __post_init__(self):
        if np.any(np.asarray(self.powers) <= 0):
            raise ValueError("path powers must be positive")
        if any(self.priors[k] <= 0 for k in GROUPS):
            raise ValueError("prior widths must be positive")

    @classmethod
    def build(cls, paths, cfg: SystemConfig, sigma_n2: float,
              powers: Optional[Sequence[float]] = None,
              priors: Optional[Dict[str, float]] = None) -> "BoundInputs":
        """Defaults: powers ``|alpha|^2 * pilot_boost``, priors from the sampling box."""
        paths = PathSet(paths)
        if powers is None:
            powers = [p.power * cfg.pilot_boost for p in paths]
        return cls(paths, np.asarray(powers, dtype=float), float(sigma_n2),
                   dict(priors or default_priors(cfg)), cfg)

    @property
    def rho(self) -> np.ndarray:
        """Per-path SNR ``power / sigma_n2``."""
        return self.powers / self.sigma_n2

    @property
    def P(self) -> int:
        return len(self.paths)


def default_priors(cfg: SystemConfig, theta_range=(np.pi / 6, 5 * np.pi / 6)):
    return {"theta": float(theta_range[1] - theta_range[0]),
            "nu": float(max(2 * cfg.nu_max, 1e-12)),
            "eta": float(max(cfg.M_CPP - 1, 1e-12))}


def sigma2_for_snr(snr_db: float, paths, cfg: SystemConfig) -> float:
    """Noise variance giving pilot-window SNR ``||Y||^2 / ||N||^2 = snr``."""
    rows = cfg.row_offset + np.arange(cfg.M_region)
    y = cfg.pilot_value * build_staf_channel(paths, cfg, cfg.N, cfg.m_pilot, rows)
    return float(np.mean(np.abs(y) ** 2)) / 10 ** (snr_db / 10)


@dataclass
class BoundResult:
    J: np.ndarray
    crb: Dict[str, float]
    zzb: Dict[str, float]
    h_tilde: Dict[str, float]
    p_na: float
    extra: Dict = field(default_factory=dict)


def _af_response(rows, m_prime, nu, eta, cfg, derivs):
    M = cfg.M
    rows = np.asarray(rows, dtype=float)
    phase = (2 * np.pi / M) * (M * cfg.c1 * eta ** 2 - m_prime * eta
                               + M * cfg.c2 * (m_prime ** 2 - rows ** 2))
    ph = np.exp(1j * phase)
    u = rows - m_prime - (nu * cfg.T - 2 * M * cfg.c1 * eta)
    c = ph * dirichlet(u, M)
    if not derivs:
        return c
    p = np.arange(M)
    # D(u) = mean_p exp(-j2 pi p u / M)
    dD = np.mean((-2j * np.pi * p / M)[None, :]
                 * np.exp(-2j * np.pi * np.outer(u, p) / M), axis=1)
    dc_nu = ph * dD * (-cfg.T)
    dphase = (2 * np.pi / M) * (2 * M * cfg.c1 * eta - m_prime)
    dc_eta = 1j * dphase * c + ph * dD * (2 * M * cfg.c1)
    return c, dc_nu, dc_eta


def signature_vector(theta, nu, eta, cfg: SystemConfig, derivs: bool = False,
                     n_symbols: Optional[int] = None, rows=None):
    """``a(theta) (x) b(nu) (x) c(nu, eta)`` over the pilot window.

    With ``derivs=True`` returns ``(phi, dphi/dtheta, dphi/dnu, dphi/deta)``.
    """
    n_symbols = cfg.N if n_symbols is None else n_symbols
    rows = cfg.row_offset + np.arange(cfg.M_region) if rows is None else rows
    k = np.arange(cfg.N_BS)
    n = np.arange(n_symbols)
    a = steering_vector(theta, cfg.N_BS, cfg.antenna_spacing)
    b = doppler_vector(nu, n_symbols, cfg.T_sym)
    if not derivs:
        c = _af_response(rows, cfg.m_pilot, nu, eta, cfg, False)
        return np.kron(a, np.kron(b, c))
    c, dc_nu, dc_eta = _af_response(rows, cfg.m_pilot, nu, eta, cfg, True)
    da = -2j * np.pi * cfg.antenna_spacing * k * np.sin(theta) * a
    db = 2j * np.pi * n * cfg.T_sym * b
    phi = np.kron(a, np.kron(b, c))
    d_theta = np.kron(da, np.kron(b, c))
    d_nu = np.kron(a, np.kron(db, c) + np.kron(b, dc_nu))
    d_eta = np.kron(a, np.kron(b, dc_eta))
    return phi, d_theta, d_nu, d_eta


def signature_matrix(paths, cfg: SystemConfig) -> np.ndarray:
    L = cfg.N_BS * cfg.N * cfg.M_region
    cols = [signature_vector(p.theta, p.nu, p.eta, cfg) for p in paths]
    return np.stack(cols, axis=1) if cols else np.zeros((L, 0), dtype=complex)


def covariance(inputs: BoundInputs, paths=None) -> np.ndarray:
    """Dense ``Phi diag(powers) Phi^H + sigma_n2 I`` (small configurations only)."""
    paths = inputs.paths if paths is None else paths
    phi = signature_matrix(paths, inputs.cfg)
    R = (phi * inputs.powers[None, :len(paths)]) @ phi.conj().T
    return R + inputs.sigma_n2 * np.eye(phi.shape[0])


def _rinv_apply(phi, powers, sigma2, B):
    # Woodbury: R^{-1} B without forming R
    if sigma2 <= 0:
        raise ConditioningError("noise variance must be positive")
    core = np.diag(sigma2 / powers) + phi.conj().T @ phi
    try:
        inner = np.linalg.solve(core, phi.conj().T @ B)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(str(exc)) from exc
    return (B - phi @ inner) / sigma2


def fisher_matrix(inputs: BoundInputs) -> np.ndarray:
    """``J_ij = Tr(R^-1 dR/dp_i R^-1 dR/dp_j)`` from analytic signature derivatives."""
    cfg, P = inputs.cfg, inputs.P
    parts = [signature_vector(p.theta, p.nu, p.eta, cfg, derivs=True)
             for p in inputs.paths]
    B = np.concatenate([np.stack([q[g] for q in parts], axis=1) for g in range(4)], axis=1)
    phi = B[:, :P]
    G = B.conj().T @ _rinv_apply(phi, inputs.powers, inputs.sigma_n2, B)
    s = inputs.powers
    J = np.empty((3 * P, 3 * P))
    for i in range(3 * P):
        a, bq = P + i, i % P
        for j in range(i, 3 * P):
            c, dq = P + j, j % P
            val = (G[bq, c] * G[dq, a] + G[bq, dq] * G[c, a]
                   + G[a, c] * G[dq, bq] + G[a, dq] * G[c, bq])
            J[i, j] = J[j, i] = s[bq] * s[dq] * val.real
    return J


def _group_index(k):
    return GROUPS.index(k) if isinstance(k, str) else int(k)


def selector(k, P: int) -> np.ndarray:
    """``w_k = [0; 1_P; 0] / sqrt(P)`` for group ``k``."""
    w = np.zeros(3 * P)
    g = _group_index(k)
    w[g * P:(g + 1) * P] = 1 / np.sqrt(P)
    return w


def crb(J: np.ndarray, k) -> float:
    """``w_k^T J^-1 w_k``, inverted with diagonal equilibration."""
    P = J.shape[0] // 3
    d = np.sqrt(np.abs(np.diag(J)))
    if np.any(d == 0):
        raise ConditioningError("Fisher matrix has a zero diagonal entry")
    Js = J / np.outer(d, d)
    w = selector(k, P) / d
    try:
        return float(w @ np.linalg.solve(Js, w))
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(str(exc)) from exc


def qfunc(x):
    return 0.5 * erfc(np.asarray(x) / np.sqrt(2))


def _x(rho, N_BS, N):
    return N_BS * N * np.asarray(rho, dtype=float)


def psi(rho, N_BS: int, N: int) -> float:
    x = _x(rho, N_BS, N)
    return float(np.sum(np.log(4 * (1 + x) / (2 + x) ** 2) + (x / (2 + x)) ** 2))


def mu_large_offset(rho, N_BS: int, N: int) -> float:
    """Large-offset value of the CGF at ``s = 1/2`` (orthogonal signal subspaces)."""
    x = _x(rho, N_BS, N)
    return float(np.sum(np.log(4 * (1 + x) / (2 + x) ** 2)))


def mu_dd_large_offset(rho, N_BS: int, N: int) -> float:
    x = _x(rho, N_BS, N)
    return float(2 * np.sum((2 * x / (2 + x)) ** 2))


def p_na(rho, N_BS: int, N: int) -> float:
    """Large-offset error probability ``exp(psi) Q(sqrt(sum((2x/(2+x))^2)/2))``."""
    x = _x(rho, N_BS, N)
    q = qfunc(np.sqrt(0.5 * np.sum((2 * x / (2 + x)) ** 2)))
    return float(np.exp(psi(rho, N_BS, N)) * q)


def zzb_from_parts(crb_k: float, pna: float, zeta: float, rho, N_BS: int, N: int,
                   K: int):
    """Closed-form ZZB for one group; returns ``(zzb, h_tilde)``."""
    x = _x(rho, N_BS, N)
    h2 = min(2 * crb_k * np.sum((2 * x / (2 + x)) ** 2), K * zeta ** 2)
    floor = pna * 12 * (zeta ** 2 / 12) / ((K + 1) * (K + 2))
    return float(floor + crb_k * gammainc(1.5, h2 / (8 * crb_k))), float(np.sqrt(h2))


def zzb(inputs: BoundInputs, k, J: Optional[np.ndarray] = None) -> float:
    J = fisher_matrix(inputs) if J is None else J
    c = crb(J, k)
    pna = p_na(inputs.rho, inputs.cfg.N_BS, inputs.cfg.N)
    return zzb_from_parts(c, pna, inputs.priors[GROUPS[_group_index(k)]],
                          inputs.rho, inputs.cfg.N_BS, inputs.cfg.N, inputs.P)[0]


def zzb_floor(zeta: float, P: int) -> float:
    """Low-SNR limit ``(1/2) * 12 * (zeta^2/12) / ((P+1)(P+2))``."""
    return 0.5 * zeta ** 2 / ((P + 1) * (P + 2))


def evaluate_bounds(inputs: BoundInputs) -> BoundResult:
    J = fisher_matrix(inputs)
    cfg = inputs.cfg
    pna = p_na(inputs.rho, cfg.N_BS, cfg.N)
    crbs, zzbs, hs = {}, {}, {}
    for k in GROUPS:
        crbs[k] = crb(J, k)
        zzbs[k], hs[k] = zzb_from_parts(crbs[k], pna, inputs.priors[k], inputs.rho,
                                        cfg.N_BS, cfg.N, inputs.P)
    return BoundResult(J, crbs, zzbs, hs, pna)


def offset_paths(paths, delta) -> PathSet:
    """Paths shifted by a ``3P`` offset vector in ``[theta; nu; eta]`` order."""
    P = len(paths)
    delta = np.asarray(delta, dtype=float)
    return PathSet(PathParams(p.theta + delta[i], p.nu + delta[P + i],
                              p.eta + delta[2 * P + i], p.alpha)
                   for i, p in enumerate(paths))


def _pair(inputs, delta):
    R0 = covariance(inputs)
    R1 = covariance(inputs, offset_paths(inputs.paths, delta))
    return R0, R1


def cgf_mu(s: float, delta, inputs: BoundInputs) -> float:
    """Exact CGF of the log-likelihood ratio between ``p + delta`` and ``p``.

    Written as ``(1-s) ln|X| - ln|s I + (1-s) X|`` with ``X = R0^-1 R1``, which
    is algebraically the three-log-determinant form and vanishes exactly at
    both endpoints.
    """
    if not 0 <= s <= 1:
        raise ValueError("s must lie in [0, 1]")
    R0, R1 = _pair(inputs, delta)
    X = np.linalg.solve(R0, R1)
    sign1, ld1 = np.linalg.slogdet(X)
    sign2, ld2 = np.linalg.slogdet(s * np.eye(len(X)) + (1 - s) * X)
    if sign2 == 0:
        raise ConditioningError("blended covariance is singular")
    return float((1 - s) * ld1 - ld2)


def cgf_mu_dd(s: float, delta, inputs: BoundInputs) -> float:
    """Second derivative of the CGF in ``s``."""
    R0, R1 = _pair(inputs, delta)
    i0, i1 = np.linalg.inv(R0), np.linalg.inv(R1)
    try:
        A = np.linalg.solve(s * i1 + (1 - s) * i0, i1 - i0)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(str(exc)) from exc
    return float(np.real(np.trace(A @ A)))
