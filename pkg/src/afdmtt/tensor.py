"""Dense complex 3-way tensor kernels.

Tensors are plain ``numpy`` arrays of shape ``(d1, d2, d3)``. Every
unfolding uses the mode-1-fastest (column-major) ordering of the remaining
indices, so that ``unfold(t, 1) == A1 @ khatri_rao(A3, A2).T`` for a CPD
tensor built from factors ``A1, A2, A3``.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DegenerateInputError, DimensionError, RankError


@dataclass(frozen=True)
class CPDFactors:
    """Weights and factor matrices of a rank-P canonical polyadic model."""

    weights: np.ndarray
    factors: Tuple[np.ndarray, np.ndarray, np.ndarray]

    def __post_init__(self):
        P = len(self.weights)
        if len(self.factors) != 3:
            raise DimensionError("expected three factor matrices")
        for f in self.factors:
            if f.ndim != 2 or f.shape[1] != P:
                raise DimensionError(
                    f"factor of shape {f.shape} does not have {P} columns")

    @property
    def rank(self) -> int:
        return len(self.weights)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return tuple(f.shape[0] for f in self.factors)


@dataclass(frozen=True)
class TTCores:
    """Head matrix (d1 x P), core tensor (P x d2 x P), tail matrix (P x d3)."""

    head: np.ndarray
    core: np.ndarray
    tail: np.ndarray
    singular_values: Tuple[np.ndarray, np.ndarray] = (np.empty(0), np.empty(0))

    @property
    def rank(self) -> int:
        return self.head.shape[1]

    def full(self) -> np.ndarray:
        """Chain contraction ``head x core x tail``."""
        return np.einsum("ia,ajb,bk->ijk", self.head, self.core, self.tail)


def _check_mode(mode):
    if mode not in (1, 2, 3):
        raise DimensionError(f"mode must be 1, 2 or 3, got {mode!r}")


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding (1-based), remaining indices mode-1 fastest."""
    _check_mode(mode)
    if t.ndim != 3:
        raise DimensionError("expected a 3-way tensor")
    return np.moveaxis(t, mode - 1, 0).reshape(t.shape[mode - 1], -1, order="F")


def fold(m: np.ndarray, mode: int, shape) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    _check_mode(mode)
    shape = tuple(shape)
    rest = [d for i, d in enumerate(shape) if i != mode - 1]
    t = np.reshape(m, [shape[mode - 1]] + rest, order="F")
    return np.moveaxis(t, 0, mode - 1)


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product; column r is ``kron(a[:, r], b[:, r])``."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionError(
            f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    return (a[:, None, :] * b[None, :, :]).reshape(-1, a.shape[1])


def cpd_construct(f: CPDFactors) -> np.ndarray:
    a1, a2, a3 = f.factors
    return np.einsum("r,ir,jr,kr->ijk", f.weights, a1, a2, a3)


def _fix_phase(u, vh):
    # largest-magnitude entry of each left singular vector made real positive
    idx = np.argmax(np.abs(u), axis=0)
    ph = u[idx, np.arange(u.shape[1])]
    mag = np.abs(ph)
    ph = np.divide(ph, mag, out=np.ones_like(ph), where=mag > 0)
    return u / ph, vh * ph[:, None]


def svd(m: np.ndarray, rank: Optional[int] = None):
    """Thin SVD with a deterministic phase convention.

    Returns ``(U, s, Vh)`` truncated to ``rank`` columns when given.
    """
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if rank is not None:
        if rank < 1 or rank > len(s):
            raise RankError(f"rank {rank} exceeds matrix dimensions {m.shape}")
        u, s, vh = u[:, :rank], s[:rank], vh[:rank]
    u, vh = _fix_phase(u, vh)
    return u, s, vh


def pinv(m: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    return np.linalg.pinv(m, rcond=rcond)


def evd(m: np.ndarray):
    """Eigen-decomposition of a square matrix -> (eigenvalues, eigenvectors)."""
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"evd needs a square matrix, got {m.shape}")
    return np.linalg.eig(m)


def best_rank1(m: np.ndarray):
    """Best Frobenius rank-1 approximation ``m ~ outer(u, v)``.

    ``u`` is scaled so that ``u[0] == 1``; the remaining scale and phase are
    carried by ``v``. If the first entry of the dominant singular vector is
    numerically zero, the largest-magnitude entry is normalised instead.
    """
    if not np.any(m):
        raise DegenerateInputError("rank-1 fit of an all-zero matrix")
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    u0 = u[:, 0]
    pivot = 0 if abs(u0[0]) > 1e-12 * np.abs(u0).max() else np.argmax(np.abs(u0))
    scale = u0[pivot]
    return u0 / scale, s[0] * scale * vh[0]


def tt_svd(t: np.ndarray, rank: int) -> TTCores:
    """Rank-``rank`` TT-SVD of a 3-way tensor.

    Singular values are absorbed into the right factor at each step, so the
    head and the reshaped core have orthonormal columns.
    """
    d1, d2, d3 = t.shape
    if rank < 1 or rank > min(d1, d3, d2 * rank) or rank > d2 * d3:
        raise RankError(f"rank {rank} incompatible with tensor shape {t.shape}")
    u1, s1, vh1 = svd(unfold(t, 1))
    head = u1[:, :rank]
    right = s1[:rank, None] * vh1[:rank]
    # (P, d2*d3) -> (P*d2, d3), P index fastest
    right = right.reshape(rank * d2, d3, order="F")
    u2, s2, vh2 = svd(right)
    core = u2[:, :rank].reshape(rank, d2, rank, order="F")
    tail = s2[:rank, None] * vh2[:rank]
    return TTCores(head, core, tail, (s1, s2))


def tt_truncation_bound(cores: TTCores) -> float:
    """Sum of squared singular values discarded by both TT-SVD steps."""
    P = cores.rank
    s1, s2 = cores.singular_values
    return float(np.sum(s1[P:] ** 2) + np.sum(s2[P:] ** 2))


def rank_by_gap(singular_values: np.ndarray) -> int:
    """Diagnostic model order: position of the largest relative gap."""
    s = np.asarray(singular_values, dtype=float)
    s = s[s > 0]
    if len(s) < 2:
        return len(s)
    return int(np.argmax(s[:-1] / s[1:])) + 1
