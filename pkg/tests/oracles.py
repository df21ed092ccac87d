"""Reference implementations used only by the tests.

Each oracle takes a different computational route from the library code it
checks: dense matrices instead of FFTs, explicit loops instead of einsum,
finite differences instead of analytic derivatives, quadrature instead of
closed forms, exhaustive search instead of the assignment solver.
"""
import itertools

import numpy as np
from scipy import integrate


# ---------------------------------------------------------------- tensors

def cpd_triple_sum(weights, a1, a2, a3):
    d1, d2, d3 = a1.shape[0], a2.shape[0], a3.shape[0]
    out = np.zeros((d1, d2, d3), dtype=complex)
    for i in range(d1):
        for j in range(d2):
            for k in range(d3):
                out[i, j, k] = sum(weights[r] * a1[i, r] * a2[j, r] * a3[k, r]
                                   for r in range(len(weights)))
    return out


def khatri_rao_loop(a, b):
    out = np.zeros((a.shape[0] * b.shape[0], a.shape[1]), dtype=complex)
    for r in range(a.shape[1]):
        for i in range(a.shape[0]):
            for j in range(b.shape[0]):
                out[i * b.shape[0] + j, r] = a[i, r] * b[j, r]
    return out


def unfold_loop(t, mode):
    """Mode-k unfolding by index arithmetic (remaining modes, lower one fastest)."""
    dims = t.shape
    k = mode - 1
    others = [d for d in range(3) if d != k]
    out = np.zeros((dims[k], dims[others[0]] * dims[others[1]]), dtype=t.dtype)
    for idx in itertools.product(*(range(d) for d in dims)):
        col = idx[others[0]] + dims[others[0]] * idx[others[1]]
        out[idx[k], col] = t[idx]
    return out


# --------------------------------------------------------------- waveform

def daft_matrix(M, c1, c2):
    """Dense ``L(c2) F L(c1)`` with an explicitly built unitary DFT."""
    m = np.arange(M)
    F = np.exp(-2j * np.pi * np.outer(m, m) / M) / np.sqrt(M)
    L1 = np.diag(np.exp(-2j * np.pi * c1 * m.astype(float) ** 2))
    L2 = np.diag(np.exp(-2j * np.pi * c2 * m.astype(float) ** 2))
    return L2 @ F @ L1


def chirp_waveform(x, t, M, M_CPP, c1, c2):
    """Chirp sum of one symbol at times ``t`` (in samples from the prefix start)."""
    out = np.zeros(len(t), dtype=complex)
    for i, ti in enumerate(t):
        tl = ti - M_CPP
        acc = 0j
        for m in range(M):
            acc += x[m] * np.exp(2j * np.pi * (c1 * tl ** 2 + m * tl / M + c2 * m ** 2))
        out[i] = acc / np.sqrt(M)
    return out


def dirichlet_sum(u, M):
    """``mean_p exp(-j2 pi p u / M)`` evaluated as an explicit sum."""
    p = np.arange(M)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return np.array([np.mean(np.exp(-2j * np.pi * p * ui / M)) for ui in u])


def pilot_pipeline(paths, cfg, n_symbols):
    """Pilot frame through a per-sample continuous-time channel, then DAFT.

    Independent of the library's modulate/add_cpp/analog_frame: the transmit
    waveform of each symbol is the chirp sum evaluated at the delayed instants
    and demodulation uses the dense DAFT matrix.
    """
    M, L = cfg.M, cfg.M_CPP
    x = np.zeros(M, dtype=complex)
    x[cfg.m_pilot] = cfg.pilot_value
    A = daft_matrix(M, cfg.c1, cfg.c2)
    sym_len = M + L
    out = np.zeros((cfg.N_BS, n_symbols, M), dtype=complex)
    for n in range(n_symbols):
        t = n * sym_len + L + np.arange(M, dtype=float)
        for p in paths:
            ts = t - p.eta
            # the prefix makes the delayed waveform the chirp sum of symbol n
            local = ts - n * sym_len
            s = chirp_waveform(x, local, M, L, cfg.c1, cfg.c2)
            r = p.alpha * np.exp(2j * np.pi * p.nu * cfg.T_s * ts) * s
            k = np.arange(cfg.N_BS)
            a = np.exp(2j * np.pi * cfg.antenna_spacing * k * np.cos(p.theta))
            out[:, n, :] += a[:, None] * (A @ r)[None, :]
    return out


# ----------------------------------------------------------------- bounds

def dense_covariance(paths, powers, sigma2, cfg, build_staf_channel):
    """``sum_i p_i vec(H_i) vec(H_i)^H + s2 I`` from the channel tensor route."""
    rows = cfg.row_offset + np.arange(cfg.M_region)
    L = cfg.N_BS * cfg.N * cfg.M_region
    R = sigma2 * np.eye(L, dtype=complex)
    for p, pw in zip(paths, powers):
        unit = type(p)(p.theta, p.nu, p.eta, 1.0)
        h = build_staf_channel([unit], cfg, cfg.N, cfg.m_pilot, rows).ravel()
        h = h / unit.alpha_tilde(cfg)
        R += pw * np.outer(h, h.conj())
    return R


def fisher_fd(paths, powers, sigma2, cfg, build_staf_channel, steps):
    """Central-difference Fisher matrix ``Tr(R^-1 dR_i R^-1 dR_j)``."""
    from afdmtt.bounds import offset_paths
    P = len(paths)
    R0 = dense_covariance(paths, powers, sigma2, cfg, build_staf_channel)
    Ri = np.linalg.inv(R0)
    dR = []
    for i in range(3 * P):
        d = np.zeros(3 * P)
        d[i] = steps[i // P]
        Rp = dense_covariance(offset_paths(paths, d), powers, sigma2, cfg, build_staf_channel)
        Rm = dense_covariance(offset_paths(paths, -d), powers, sigma2, cfg, build_staf_channel)
        dR.append(Ri @ (Rp - Rm) / (2 * steps[i // P]))
    J = np.empty((3 * P, 3 * P))
    for i in range(3 * P):
        for j in range(3 * P):
            J[i, j] = np.real(np.trace(dR[i] @ dR[j]))
    return J


def zzb_quadrature(crb_k, pna, zeta, h_tilde, K):
    """Both summands of the closed-form ZZB by numerical integration.

    Prior-floor term: ``(pna / K) * int_0^{sqrt(K) zeta} h (1 - h/(sqrt(K) zeta))^K dh``.
    Asymptotic term: ``crb * (2/sqrt(pi)) * int_0^{h~^2/(8 crb)} sqrt(s) exp(-s) ds``.
    """
    a = np.sqrt(K) * zeta
    floor, _ = integrate.quad(lambda h: h * (1 - h / a) ** K, 0, a)
    upper = h_tilde ** 2 / (8 * crb_k)
    # s = u^2 removes the square-root cusp at the origin
    gam, _ = integrate.quad(lambda u: 2 * u * u * np.exp(-u * u), 0, np.sqrt(upper),
                            epsabs=0, epsrel=1e-12, limit=200)
    return pna * floor / K + crb_k * 2 / np.sqrt(np.pi) * gam


# ---------------------------------------------------------------- metrics

def exhaustive_alignment(cost):
    P = cost.shape[0]
    best, best_perm = np.inf, None
    for perm in itertools.permutations(range(P)):
        c = sum(cost[i, perm[i]] for i in range(P))
        if c < best:
            best, best_perm = c, perm
    return np.array(best_perm), best
