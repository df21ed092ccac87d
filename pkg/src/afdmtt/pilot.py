"""Embedded pilot frame: one pilot per leading symbol, flanked by guard bins."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import LayoutError
from .waveform import SystemConfig


@dataclass(frozen=True)
class FrameLayout:
    """Cell roles of an ``N_frame x M`` transmit grid.

    The first ``N`` symbols carry a pilot at ``m_pilot`` with ``M_guard``
    empty bins on each side (indices taken modulo ``M``); every other cell
    carries data.
    """

    m_pilot: int
    N: int
    M_guard: int
    data_mask: np.ndarray

    @classmethod
    def from_config(cls, cfg: SystemConfig) -> "FrameLayout":
        mask = np.ones((cfg.N_frame, cfg.M), dtype=bool)
        guard = (cfg.m_pilot + np.arange(-cfg.M_guard, cfg.M_guard + 1)) % cfg.M
        mask[:cfg.N, guard] = False
        return cls(cfg.m_pilot, cfg.N, cfg.M_guard, mask)

    @property
    def n_data(self) -> int:
        return int(self.data_mask.sum())

    def guard_mask(self) -> np.ndarray:
        """Guard cells (pilot cells excluded)."""
        g = ~self.data_mask
        g[:self.N, self.m_pilot] = False
        return g


@dataclass(frozen=True)
class PilotObservation:
    """Received pilot window ``N_BS x N x M_region`` and its placement."""

    y_hat: np.ndarray
    pilot_value: complex
    row_offset: int

    @property
    def rows(self) -> np.ndarray:
        """Absolute affine-frequency bins covered by the window."""
        return self.row_offset + np.arange(self.y_hat.shape[2])


def build_frame(cfg: SystemConfig, data_qam=None,
                pilot_value: Optional[complex] = None) -> np.ndarray:
    """Assemble the transmit grid.

    ``data_qam`` is either a full ``N_frame x M`` grid that is zero outside
    the data cells, or a flat vector filling the data cells in row-major
    order. ``None`` leaves data cells empty.
    """
    layout = FrameLayout.from_config(cfg)
    pilot_value = cfg.pilot_value if pilot_value is None else pilot_value
    grid = np.zeros((cfg.N_frame, cfg.M), dtype=complex)
    if data_qam is not None:
        data_qam = np.asarray(data_qam, dtype=complex)
        if data_qam.ndim == 1:
            if data_qam.size != layout.n_data:
                raise LayoutError(
                    f"{data_qam.size} data symbols for {layout.n_data} data cells")
            grid[layout.data_mask] = data_qam
        else:
            if data_qam.shape != grid.shape:
                raise LayoutError(
                    f"data grid shape {data_qam.shape}, expected {grid.shape}")
            if np.any(data_qam[~layout.data_mask] != 0):
                raise LayoutError("data overlaps pilot or guard cells")
            grid = data_qam.copy()
    grid[:cfg.N, cfg.m_pilot] = pilot_value
    return grid


def extract_pilot_tensor(received, cfg: SystemConfig,
                         pilot_value: Optional[complex] = None) -> PilotObservation:
    """Cut the ``M_region`` bins ending at the pilot from the pilot symbols.

    ``received`` is the demodulated ``N_BS x n_symbols x M`` grid.
    """
    received = np.asarray(received)
    lo, hi = cfg.row_offset, cfg.m_pilot + 1
    if lo < 0 or hi > cfg.M or received.shape[-1] != cfg.M:
        raise LayoutError(f"window [{lo}, {hi}) does not fit {received.shape[-1]} bins")
    if received.shape[1] < cfg.N:
        raise LayoutError(f"need {cfg.N} pilot symbols, got {received.shape[1]}")
    pilot_value = cfg.pilot_value if pilot_value is None else pilot_value
    return PilotObservation(received[:, :cfg.N, lo:hi].copy(), complex(pilot_value), lo)
