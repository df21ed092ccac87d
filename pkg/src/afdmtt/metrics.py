"""Scoring: path alignment, parameter MSE, NMSE, QAM, LMMSE detection, BER and SE."""
import numpy as np
from scipy.optimize import linear_sum_assignment

from .channel import PathSet
from .waveform import SystemConfig


def _est_arrays(est):
    return (np.asarray(est.theta), np.asarray(est.nu), np.asarray(est.eta),
            np.asarray(est.alpha_tilde))


def alignment_cost(truth: PathSet, est, cfg: SystemConfig) -> np.ndarray:
    """Pairwise cost ``(dcos/2)^2 + (dnu*T_sym)^2 + (deta/M_CPP)^2``."""
    th, nu, eta, _ = _est_arrays(est)
    t_th, t_nu, t_eta = truth.array("theta"), truth.array("nu"), truth.array("eta")
    eta_scale = max(cfg.M_CPP, 1)
    return (((np.cos(t_th)[:, None] - np.cos(th)[None]) / 2) ** 2
            + ((t_nu[:, None] - nu[None]) * cfg.T_sym) ** 2
            + ((t_eta[:, None] - eta[None]) / eta_scale) ** 2)


def align_paths(truth: PathSet, est, cfg: SystemConfig) -> np.ndarray:
    """Permutation ``perm`` with estimate ``perm[i]`` matched to true path ``i``."""
    cost = alignment_cost(truth, est, cfg)
    if cost.shape[0] != cost.shape[1]:
        raise ValueError("truth and estimate have different path counts")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(rows), dtype=int)
    perm[rows] = cols
    return perm


def param_mse(truth: PathSet, est, perm, which: str, cfg: SystemConfig = None) -> float:
    """Mean squared error over paths for ``which`` in theta/nu/eta/gain."""
    th, nu, eta, gain = _est_arrays(est)
    perm = np.asarray(perm)
    if which == "theta":
        err = truth.array("theta") - th[perm]
    elif which == "nu":
        err = truth.array("nu") - nu[perm]
    elif which == "eta":
        err = truth.array("eta") - eta[perm]
    elif which == "gain":
        if cfg is None:
            raise ValueError("gain MSE needs the config to form alpha_tilde")
        err = truth.alpha_tilde(cfg) - gain[perm]
    else:
        raise ValueError(f"unknown parameter {which!r}")
    return float(np.mean(np.abs(err) ** 2))


def nmse(h_true: np.ndarray, h_est: np.ndarray) -> float:
    """``||H_est - H||_F^2 / ||H||_F^2``."""
    if h_true.shape != h_est.shape:
        raise ValueError(f"shape mismatch {h_true.shape} vs {h_est.shape}")
    den = np.linalg.norm(h_true) ** 2
    if den == 0:
        raise ValueError("reference channel is zero")
    return float(np.linalg.norm(h_est - h_true) ** 2 / den)


def _qam_params(order):
    if order not in (4, 16, 64, 256):
        raise ValueError(f"unsupported QAM order {order}")
    k = int(np.log2(order)) // 2
    L = 2 ** k
    scale = np.sqrt(2 * (L ** 2 - 1) / 3)
    return k, L, scale


def _bits_to_int(bits):
    k = bits.shape[-1]
    return bits @ (1 << np.arange(k - 1, -1, -1))


def _int_to_bits(v, k):
    return (v[:, None] >> np.arange(k - 1, -1, -1)) & 1


def _gray_decode(g):
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


def qam_mod(bits, order: int = 16) -> np.ndarray:
    """Gray-mapped square QAM with unit average energy.

    Each symbol takes ``log2(order)`` bits: the first half select the
    in-phase level and the second half the quadrature level.
    """
    k, L, scale = _qam_params(order)
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % (2 * k):
        raise ValueError(f"bit count {bits.size} not divisible by {2 * k}")
    b = bits.reshape(-1, 2 * k)
    i = _gray_decode(_bits_to_int(b[:, :k]))
    q = _gray_decode(_bits_to_int(b[:, k:]))
    return ((2 * i - (L - 1)) + 1j * (2 * q - (L - 1))) / scale


def qam_demod(symbols, order: int = 16) -> np.ndarray:
    """Minimum-distance hard decision back to bits."""
    k, L, scale = _qam_params(order)
    s = np.asarray(symbols, dtype=complex).ravel() * scale
    i = np.clip(np.round((s.real + L - 1) / 2), 0, L - 1).astype(np.int64)
    q = np.clip(np.round((s.imag + L - 1) / 2), 0, L - 1).astype(np.int64)
    bits = np.concatenate([_int_to_bits(i ^ (i >> 1), k),
                           _int_to_bits(q ^ (q >> 1), k)], axis=1)
    return bits.ravel()


def qam_constellation(order: int = 16) -> np.ndarray:
    k = int(np.log2(order))
    bits = _int_to_bits(np.arange(order), k).ravel()
    return qam_mod(bits, order)


def lmmse_detect(y, H, sigma_n2: float) -> np.ndarray:
    """Linear MMSE estimate ``(H^H H + s2 I)^-1 H^H y``.

    Equal to ``H^H (H H^H + s2 I)^-1 y``; with ``sigma_n2 = 0`` this is
    least-squares (zero forcing for full-rank ``H``). ``y`` may hold several
    observations as columns.
    """
    H = np.asarray(H, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if sigma_n2 == 0:
        return np.linalg.lstsq(H, y, rcond=None)[0]
    gram = H.conj().T @ H + sigma_n2 * np.eye(H.shape[1])
    return np.linalg.solve(gram, H.conj().T @ y)


def ber(bits_tx, bits_rx) -> float:
    bits_tx = np.asarray(bits_tx).ravel()
    bits_rx = np.asarray(bits_rx).ravel()
    if bits_tx.size != bits_rx.size:
        raise ValueError("bit streams differ in length")
    return float(np.mean(bits_tx != bits_rx)) if bits_tx.size else 0.0


def empirical_sinr_db(x, x_hat) -> float:
    """Signal power over residual power after equalisation, in dB."""
    x = np.asarray(x)
    err = np.linalg.norm(np.asarray(x_hat) - x) ** 2
    if err == 0:
        return float("inf")
    return float(10 * np.log10(np.linalg.norm(x) ** 2 / err))


def se(sinr_db: float, gamma: float) -> float:
    """Spectral efficiency ``(1 - gamma) log2(1 + SINR)`` in bit/s/Hz."""
    if not 0 <= gamma < 1:
        raise ValueError("overhead must lie in [0, 1)")
    return float((1 - gamma) * np.log2(1 + 10 ** (sinr_db / 10)))


def pilot_overhead_afdm(N_p: int, M_g: int, N: int, M: int) -> float:
    """Fraction of the frame spent on pilots and guards, ``2 N_p M_g / (N M)``."""
    return 2 * N_p * M_g / (N * M)
