"""Doubly-dispersive MIMO channel in the spatial / time / affine-frequency domain.

Two independent routes to the received pilot response are provided:

* the closed-form STAF channel (:func:`h_entry`, :func:`build_staf_channel`),
  which is what estimators and bounds are built on, and
* :func:`time_domain_receive`, which applies delay, Doppler and array phase to
  the analytic continuous-time chirp waveform sample by sample. It serves as
  the reference that the closed form is tested against.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError, DimensionError, SamplingError
from .waveform import SystemConfig, analog_frame, demodulate, remove_cpp


@dataclass(frozen=True)
class PathParams:
    """One propagation path.

    ``theta`` is the angle of arrival (rad), ``nu`` the Doppler shift (Hz),
    ``eta`` the delay in samples (integer plus fractional tap) and ``alpha``
    the complex path gain.
    """

    theta: float
    nu: float
    eta: float
    alpha: complex = 1.0 + 0j

    def tau(self, cfg: SystemConfig) -> float:
        """Delay in seconds."""
        return self.eta * cfg.T_s

    def loc(self, cfg: SystemConfig) -> float:
        """Affine-frequency intercept of the main lobe (in bins)."""
        return self.nu * cfg.T - 2 * cfg.M * cfg.c1 * self.eta

    def alpha_tilde(self, cfg: SystemConfig) -> complex:
        """Gain seen after prefix removal, ``alpha * exp(j2*pi*nu*(T_cpp - tau))``."""
        return complex(self.alpha * np.exp(
            2j * np.pi * self.nu * (cfg.M_CPP * cfg.T_s - self.tau(cfg))))

    @property
    def power(self) -> float:
        return float(abs(self.alpha) ** 2)


class PathSet(tuple):
    """Immutable ordered collection of :class:`PathParams`."""

    def __new__(cls, paths: Sequence[PathParams] = ()):
        return super().__new__(cls, tuple(paths))

    @property
    def P(self) -> int:
        return len(self)

    def array(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self])

    def locs(self, cfg: SystemConfig) -> np.ndarray:
        return np.array([p.loc(cfg) for p in self], dtype=float)

    def alpha_tilde(self, cfg: SystemConfig) -> np.ndarray:
        return np.array([p.alpha_tilde(cfg) for p in self], dtype=complex)

    def scaled(self, gamma: complex) -> "PathSet":
        return PathSet(PathParams(p.theta, p.nu, p.eta, p.alpha * gamma)
                       for p in self)


@dataclass(frozen=True)
class PathRanges:
    """Sampling box for random path sets."""

    theta_min: float = math.pi / 6
    theta_max: float = 5 * math.pi / 6
    nu_max: float = 0.0
    eta_max: float = 0.0
    min_loc_separation: float = 1.0
    min_cos_separation: float = 0.0

    @classmethod
    def for_config(cls, cfg: SystemConfig, **kw) -> "PathRanges":
        """Box matching ``cfg``; angles kept one array beamwidth apart."""
        kw.setdefault("nu_max", cfg.nu_max)
        kw.setdefault("eta_max", float(cfg.M_CPP - 1))
        kw.setdefault("min_cos_separation", 1.0 / (cfg.N_BS * cfg.antenna_spacing))
        return cls(**kw)


def _min_gap(v):
    if len(v) < 2:
        return np.inf
    d = np.abs(v[:, None] - v[None, :])
    np.fill_diagonal(d, np.inf)
    return d.min()


def sample_paths(rng: np.random.Generator, cfg: SystemConfig,
                 ranges: Optional[PathRanges] = None, P: Optional[int] = None,
                 max_tries: int = 1000) -> PathSet:
    """Draw a resolvable random path set.

    Angles, Doppler shifts and delays are uniform on their ranges and gains
    have unit magnitude with uniform phase. Draws are repeated until every
    pair of main-lobe positions is at least ``min_loc_separation`` bins apart
    and every pair of direction cosines at least ``min_cos_separation``.
    """
    ranges = ranges or PathRanges.for_config(cfg)
    P = cfg.P if P is None else P
    for _ in range(max_tries):
        theta = rng.uniform(ranges.theta_min, ranges.theta_max, P)
        nu = rng.uniform(-ranges.nu_max, ranges.nu_max, P)
        eta = rng.uniform(0.0, ranges.eta_max, P)
        phi = rng.uniform(0.0, 2 * np.pi, P)
        paths = PathSet(PathParams(float(t), float(v), float(e), complex(np.exp(1j * f)))
                        for t, v, e, f in zip(theta, nu, eta, phi))
        if (_min_gap(paths.locs(cfg)) >= ranges.min_loc_separation
                and _min_gap(np.cos(theta)) >= ranges.min_cos_separation):
            return paths
    raise SamplingError(
        f"no resolvable set of {P} paths found in {max_tries} draws")


def steering_vector(theta: float, X: int, spacing: float = 0.5) -> np.ndarray:
    """Uniform linear array response ``exp(j2*pi*spacing*k*cos(theta))``."""
    if X < 1:
        raise DimensionError("array needs at least one element")
    return np.exp(2j * np.pi * spacing * np.arange(X) * np.cos(theta))


def doppler_vector(nu: float, n_symbols: int, T_sym: float) -> np.ndarray:
    """Symbol-to-symbol Doppler rotation ``exp(j2*pi*nu*n*T_sym)``."""
    return np.exp(2j * np.pi * nu * np.arange(n_symbols) * T_sym)


def dirichlet(u, M: int) -> np.ndarray:
    """``(exp(-j2*pi*u) - 1) / (M*(exp(-j2*pi*u/M) - 1))`` with its limits.

    Evaluated as ``exp(-j*pi*u*(M-1)/M) * (-1)**(k*(M-1)) * sinc(e)/sinc(e/M)``
    with ``u = k*M + e``, ``|e| <= M/2``, which is finite everywhere and equals
    1 at every multiple of ``M``.
    """
    u = np.asarray(u, dtype=float)
    k = np.round(u / M)
    e = u - k * M
    sign = np.where((k * (M - 1)) % 2 == 0, 1.0, -1.0)
    ratio = np.sinc(e) / np.sinc(e / M)
    return np.exp(-1j * np.pi * u * (M - 1) / M) * sign * ratio


def h_entry(m, m_prime, path: PathParams, cfg: SystemConfig) -> np.ndarray:
    """Affine-frequency response ``H_i[m, m']`` of one path (broadcasts)."""
    M = cfg.M
    m = np.asarray(m, dtype=float)
    m_prime = np.asarray(m_prime, dtype=float)
    eta = path.eta
    phase = (2 * np.pi / M) * (M * cfg.c1 * eta ** 2 - m_prime * eta
                               + M * cfg.c2 * (m_prime ** 2 - m ** 2))
    u = m - m_prime - path.loc(cfg)
    return np.exp(1j * phase) * dirichlet(u, M)


def h_matrix(path: PathParams, cfg: SystemConfig) -> np.ndarray:
    """Full ``M x M`` matrix ``H_i`` of one path."""
    idx = np.arange(cfg.M)
    return h_entry(idx[:, None], idx[None, :], path, cfg)


def build_staf_channel(paths: Sequence[PathParams], cfg: SystemConfig,
                       n_symbols: Optional[int] = None,
                       m_prime: Optional[int] = None,
                       rows=None) -> np.ndarray:
    """STAF channel tensor for a unit symbol on transmit subcarrier ``m_prime``.

    Returns an ``N_BS x n_symbols x len(rows)`` array (``rows`` defaults to
    all ``M`` subcarriers) with entries
    ``sum_i alpha_tilde_i a_i[n_BS] exp(j2*pi*nu_i*n*T_sym) H_i[m, m']``.
    """
    n_symbols = cfg.N if n_symbols is None else n_symbols
    m_prime = cfg.m_pilot if m_prime is None else m_prime
    rows = np.arange(cfg.M) if rows is None else np.asarray(rows)
    out = np.zeros((cfg.N_BS, n_symbols, len(rows)), dtype=complex)
    for p in paths:
        a = steering_vector(p.theta, cfg.N_BS, cfg.antenna_spacing)
        b = doppler_vector(p.nu, n_symbols, cfg.T_sym)
        c = p.alpha_tilde(cfg) * h_entry(rows, m_prime, p, cfg)
        out += a[:, None, None] * b[None, :, None] * c[None, None, :]
    return out


def effective_channel(paths: Sequence[PathParams], cfg: SystemConfig,
                      n: int) -> np.ndarray:
    """Antenna-stacked ``(N_BS*M) x M`` channel of symbol ``n``.

    Row ``k*M + m`` maps transmit subcarriers to receive subcarrier ``m`` on
    antenna ``k``.
    """
    return effective_channels(paths, cfg, [n])[0]


def effective_channels(paths: Sequence[PathParams], cfg: SystemConfig,
                       symbols) -> list:
    """:func:`effective_channel` for several symbols, sharing the per-path matrices."""
    mats = [h_matrix(p, cfg) for p in paths]
    steer = [p.alpha_tilde(cfg) * steering_vector(p.theta, cfg.N_BS, cfg.antenna_spacing)
             for p in paths]
    out = []
    for n in symbols:
        h = np.zeros((cfg.N_BS, cfg.M, cfg.M), dtype=complex)
        for p, hm, a in zip(paths, mats, steer):
            g = np.exp(2j * np.pi * p.nu * n * cfg.T_sym)
            h += (g * a)[:, None, None] * hm[None]
        out.append(h.reshape(cfg.N_BS * cfg.M, cfg.M))
    return out


def time_domain_receive(frame_symbols, paths: Sequence[PathParams],
                        cfg: SystemConfig) -> np.ndarray:
    """Sampled received streams, one row per antenna.

    ``frame_symbols`` is an ``(n_symbols, M + M_CPP)`` array of transmitted
    samples with prefix. The transmitted waveform is rebuilt as the analytic
    chirp sum, so fractional delays are applied exactly without interpolation.
    Sample ``p`` of the output is taken at ``t = p*T_s`` from the frame start.
    """
    frame = np.atleast_2d(np.asarray(frame_symbols, dtype=complex))
    if frame.shape[-1] != cfg.M + cfg.M_CPP:
        raise DimensionError("frame symbols must include the prefix")
    x_grid = demodulate(remove_cpp(frame, cfg), cfg)
    n_samples = frame.shape[0] * (cfg.M + cfg.M_CPP)
    t = np.arange(n_samples, dtype=float)
    out = np.zeros((cfg.N_BS, n_samples), dtype=complex)
    for p in paths:
        if p.eta > cfg.M_CPP:
            raise ContractError(
                f"delay of {p.eta} samples exceeds the {cfg.M_CPP}-sample prefix")
        a = steering_vector(p.theta, cfg.N_BS, cfg.antenna_spacing)
        shifted = analog_frame(x_grid, t - p.eta, cfg)
        dop = np.exp(2j * np.pi * p.nu * cfg.T_s * (t - p.eta))
        out += p.alpha * a[:, None] * (dop * shifted)[None, :]
    return out


def receive_grid(frame_symbols, paths, cfg: SystemConfig) -> np.ndarray:
    """Time-domain route followed by prefix removal and demodulation.

    Returns the ``N_BS x n_symbols x M`` affine-frequency grid.
    """
    frame = np.atleast_2d(np.asarray(frame_symbols, dtype=complex))
    r = time_domain_receive(frame, paths, cfg)
    r = r.reshape(cfg.N_BS, frame.shape[0], cfg.M + cfg.M_CPP)
    return demodulate(remove_cpp(r, cfg), cfg)


def awgn(t: np.ndarray, snr_db: float, rng: np.random.Generator,
         signal_power: Optional[float] = None):
    """Add circular complex Gaussian noise at the given SNR.

    ``signal_power`` defaults to the mean squared magnitude of ``t``.
    ``snr_db = inf`` returns an unchanged copy with zero noise variance.
    """
    t = np.asarray(t, dtype=complex)
    if np.isposinf(snr_db):
        return t.copy(), 0.0
    if signal_power is None:
        signal_power = float(np.mean(np.abs(t) ** 2))
    sigma2 = signal_power / 10 ** (snr_db / 10)
    noise = rng.standard_normal(t.shape) + 1j * rng.standard_normal(t.shape)
    return t + np.sqrt(sigma2 / 2) * noise, sigma2
