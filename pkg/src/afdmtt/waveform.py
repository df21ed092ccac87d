"""AFDM modulation, chirp-periodic prefix and system configuration.

The discrete affine Fourier transform (DAFT) pair used throughout is

    modulate:   s = L(c1)^H F^H L(c2)^H x
    demodulate: x = L(c2) F L(c1) s

with ``L(c) = diag(exp(-2j*pi*c*m**2))`` and ``F`` the unitary DFT. Times
handled by :func:`analog_frame` are in units of the sampling interval ``T_s``
and measured from the start of the first symbol's prefix.
"""
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DimensionError

SPEED_OF_LIGHT = 3e8


def doppler_from_velocity(v_kmh: float, f_c: float) -> float:
    """Maximum Doppler shift (Hz) for a speed in km/h at carrier ``f_c``."""
    return v_kmh / 3.6 * f_c / SPEED_OF_LIGHT


def choose_c1(alpha_max: float, k_nu: int = 0, M: int = 1024,
              override_half: bool = False) -> float:
    """First affine parameter.

    ``(2*(ceil(alpha_max) + k_nu) + 1) / (2M)`` gives full diversity for a
    normalised maximum Doppler ``alpha_max = nu_max * T``; ``override_half``
    selects the low-overhead value ``1/(2M)``.
    """
    if override_half:
        return 1.0 / (2 * M)
    return (2 * (math.ceil(alpha_max) + k_nu) + 1) / (2 * M)


def default_region(M, M_CPP, c1, alpha_max):
    """Observation window covering every main lobe plus one neighbour."""
    return int(math.ceil(2 * M * c1 * (M_CPP - 1) + alpha_max - 1e-12)) + 3


@dataclass(frozen=True)
class SystemConfig:
    """Deployment constants of the MIMO-AFDM link.

    Use :meth:`build` to get the defaults (1024 subcarriers, 30 kHz spacing,
    15 GHz carrier, 72-sample prefix, 11 pilot symbols, 16 BS antennas,
    5 paths, 300 km/h) with derived fields filled in.
    """

    M: int
    N: int
    N_frame: int
    M_CPP: int
    delta_f: float
    f_c: float
    c1: float
    c2: float
    N_BS: int
    antenna_spacing: float
    m_pilot: int
    M_guard: int
    M_region: int
    P: int
    nu_max: float = 0.0
    pilot_boost: float = 1.0
    qam_order: int = 16

    def __post_init__(self):
        checks = [
            ("M", self.M >= 2, "need at least 2 subcarriers"),
            ("N", self.N >= 1, "need at least one pilot symbol"),
            ("N_frame", self.N_frame >= self.N, "frame shorter than pilot block"),
            ("M_CPP", 0 <= self.M_CPP < self.M, "prefix must be in [0, M)"),
            ("delta_f", self.delta_f > 0, "must be positive"),
            ("N_BS", self.N_BS >= 1, "must be positive"),
            ("antenna_spacing", self.antenna_spacing > 0, "must be positive"),
            ("m_pilot", 0 <= self.m_pilot < self.M, "must lie in [0, M)"),
            ("M_region", 1 <= self.M_region <= self.m_pilot + 1,
             "window must fit below the pilot (M_region <= m_pilot + 1)"),
            ("M_guard", self.M_guard >= self.M_CPP, "guard shorter than prefix"),
            ("c2", abs(self.c2) < 1 / (2 * self.M), "must be below 1/(2M)"),
            ("P", self.P >= 1, "must be positive"),
            ("nu_max", self.nu_max >= 0, "must be non-negative"),
            ("pilot_boost", self.pilot_boost > 0, "must be positive"),
            ("qam_order", self.qam_order in (4, 16, 64, 256), "unsupported"),
        ]
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(key, msg)

    @classmethod
    def build(cls, *, M=1024, N=11, N_frame=None, M_CPP=72, delta_f=30e3,
              f_c=15e9, c1=None, c2=0.0, N_BS=16, antenna_spacing=0.5,
              m_pilot=None, M_guard=None, M_region=None, P=5, nu_max=None,
              v_max_kmh=300.0, k_nu=0, pilot_boost=1.0, qam_order=16):
        """Construct a config, deriving unspecified fields."""
        if nu_max is None:
            nu_max = doppler_from_velocity(v_max_kmh, f_c)
        alpha_max = nu_max / delta_f
        if c1 is None:
            c1 = choose_c1(alpha_max, k_nu, M, override_half=True)
        if M_guard is None:
            M_guard = M_CPP
        if M_region is None:
            M_region = default_region(M, M_CPP, c1, alpha_max)
        if m_pilot is None:
            m_pilot = M // 2
        if N_frame is None:
            N_frame = N + 3
        return cls(M=M, N=N, N_frame=N_frame, M_CPP=M_CPP, delta_f=delta_f,
                   f_c=f_c, c1=c1, c2=c2, N_BS=N_BS,
                   antenna_spacing=antenna_spacing, m_pilot=m_pilot,
                   M_guard=M_guard, M_region=M_region, P=P, nu_max=nu_max,
                   pilot_boost=pilot_boost, qam_order=qam_order)

    def replace(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    @property
    def T(self) -> float:
        return 1.0 / self.delta_f

    @property
    def T_s(self) -> float:
        return self.T / self.M

    @property
    def T_sym(self) -> float:
        return (self.M + self.M_CPP) * self.T_s

    @property
    def alpha_max(self) -> float:
        return self.nu_max * self.T

    @property
    def row_offset(self) -> int:
        """Absolute affine-frequency bin of the first observation row."""
        return self.m_pilot - self.M_region + 1

    @property
    def pilot_value(self) -> complex:
        return complex(math.sqrt(self.pilot_boost))

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c


def _chirp(c, n):
    idx = np.arange(n)
    return np.exp(-2j * np.pi * c * idx.astype(float) ** 2)


def modulate(x, cfg: SystemConfig) -> np.ndarray:
    """IDAFT along the last axis (no prefix)."""
    x = np.asarray(x, dtype=complex)
    if x.shape[-1] != cfg.M:
        raise DimensionError(f"expected {cfg.M} subcarriers, got {x.shape[-1]}")
    inner = np.fft.ifft(np.conj(_chirp(cfg.c2, cfg.M)) * x, norm="ortho")
    return np.conj(_chirp(cfg.c1, cfg.M)) * inner


def demodulate(s, cfg: SystemConfig) -> np.ndarray:
    """DAFT along the last axis; exact inverse of :func:`modulate`."""
    s = np.asarray(s, dtype=complex)
    if s.shape[-1] != cfg.M:
        raise DimensionError(f"expected {cfg.M} samples, got {s.shape[-1]}")
    inner = np.fft.fft(_chirp(cfg.c1, cfg.M) * s, norm="ortho")
    return _chirp(cfg.c2, cfg.M) * inner


def add_cpp(s, cfg: SystemConfig) -> np.ndarray:
    """Prepend the chirp-periodic prefix (last axis grows by ``M_CPP``).

    Prefix sample ``p`` in ``[-M_CPP, -1]`` is
    ``s[p + M] * exp(-2j*pi*c1*(M**2 + 2*M*p))``.
    """
    s = np.asarray(s, dtype=complex)
    M, L = cfg.M, cfg.M_CPP
    if s.shape[-1] != M:
        raise DimensionError(f"expected {M} samples, got {s.shape[-1]}")
    p = np.arange(-L, 0)
    prefix = s[..., p + M] * np.exp(-2j * np.pi * cfg.c1 * (M ** 2 + 2 * M * p))
    return np.concatenate([prefix, s], axis=-1)


def remove_cpp(s, cfg: SystemConfig) -> np.ndarray:
    s = np.asarray(s)
    if s.shape[-1] != cfg.M + cfg.M_CPP:
        raise DimensionError(
            f"expected {cfg.M + cfg.M_CPP} samples, got {s.shape[-1]}")
    return s[..., cfg.M_CPP:]


def analog_frame(x_grid, t, cfg: SystemConfig) -> np.ndarray:
    """Evaluate the continuous chirp-sum frame at arbitrary times.

    Parameters
    ----------
    x_grid : (n_symbols, M) complex array
        Affine-frequency symbols of each AFDM symbol.
    t : array_like of float
        Times in units of ``T_s`` from the start of the frame (symbol ``n``
        occupies ``[n*(M+M_CPP), (n+1)*(M+M_CPP))``, prefix first).

    Notes
    -----
    Normalised by ``1/sqrt(M)`` instead of the pulse amplitude ``1/sqrt(T)``
    so that samples at ``t = n*(M+M_CPP) + M_CPP + p`` coincide with
    ``modulate(x_grid[n])[p]``.
    """
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=complex))
    t = np.asarray(t, dtype=float)
    M, L = cfg.M, cfg.M_CPP
    n_sym = x_grid.shape[0]
    sym_len = M + L
    n = np.floor(t / sym_len).astype(int)
    local = t - n * sym_len - L
    valid = (n >= 0) & (n < n_sym)
    m = np.arange(M)
    phase = (cfg.c1 * local[..., None] ** 2 + local[..., None] * m / M
             + cfg.c2 * m.astype(float) ** 2)
    basis = np.exp(2j * np.pi * phase) / np.sqrt(M)
    coeff = x_grid[np.clip(n, 0, n_sym - 1)]
    out = np.sum(basis * coeff, axis=-1)
    return np.where(valid, out, 0.0)
