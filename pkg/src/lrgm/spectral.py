"""Adjacency spectral embedding with an eigenvalue sign matrix.

``A ~ X J X^T`` where ``X[:, k] = sqrt(|lambda_k|) v_k`` and ``J`` is the
diagonal of eigenvalue signs, positives first.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
ZERO_EIG_RTOL = 1e-12


class SignatureError(ValueError):
    """Raised when an embedding retains no usable eigenvalues."""


@dataclass(frozen=True)
class Embedding:
    X: np.ndarray
    J: np.ndarray
    eigenvalues: np.ndarray

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def d_pos(self) -> int:
        return int(np.sum(self.J > 0))

    @property
    def d_neg(self) -> int:
        return int(np.sum(self.J < 0))

    @property
    def signature(self) -> tuple[int, int]:
        return self.d_pos, self.d_neg

    @property
    def bound(self) -> float:
        """Largest row norm of ``X``."""
        if self.X.size == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.X, axis=1)))

    def gram(self) -> np.ndarray:
        return (self.X * self.J) @ self.X.T


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if M.size and np.max(np.abs(M - M.T)) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return M


def sym_eigs_topk(M, k: int) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` eigenpairs of largest magnitude of a symmetric matrix.

    Eigenvalues are returned in order of decreasing ``|lambda|`` (ties keep
    LAPACK's ascending order), eigenvectors as orthonormal columns.
    """
    M = _check_symmetric(M)
    n = M.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    # full decomposition; n stays in the low thousands
    vals, vecs = np.linalg.eigh((M + M.T) / 2)
    order = np.argsort(-np.abs(vals), kind="stable")[:k]
    return vals[order], vecs[:, order]


def embed(A, d: int, signature: tuple[int, int] | None = None) -> Embedding:
    """Spectral embedding of a symmetric matrix into ``d`` dimensions.

    By default the ``d`` eigenvalues of largest magnitude are kept.  Passing
    ``signature=(d_pos, d_neg)`` keeps the ``d_pos`` largest positive and the
    ``d_neg`` most negative eigenvalues instead, for graphs whose sign
    pattern is known in advance.

    Columns are ordered positives first, each block by decreasing ``|lambda|``.
    Eigenvalues below ``1e-12 * ||A||_F`` in magnitude are dropped with a
    warning, so the returned dimension can be smaller than ``d``.
    """
    A = _check_symmetric(A)
    n = A.shape[0]
    if d < 1:
        raise ValueError("d must be >= 1")
    if signature is None:
        vals, vecs = sym_eigs_topk(A, min(d, n))
    else:
        d_pos, d_neg = signature
        if d_pos < 0 or d_neg < 0 or d_pos + d_neg != d:
            raise ValueError(f"signature {signature} does not add up to d={d}")
        all_vals, all_vecs = np.linalg.eigh((A + A.T) / 2)
        pos = np.flatnonzero(all_vals > 0)[::-1][:d_pos]
        neg = np.flatnonzero(all_vals < 0)[:d_neg]
        if pos.size < d_pos or neg.size < d_neg:
            raise SignatureError(f"matrix has too few eigenvalues for signature {signature}")
        idx = np.concatenate([pos, neg])
        vals, vecs = all_vals[idx], all_vecs[:, idx]

    cutoff = ZERO_EIG_RTOL * np.linalg.norm(A)
    keep = (np.abs(vals) >= cutoff) & (vals != 0)
    if not np.any(keep):
        raise SignatureError("all retained eigenvalues are numerically zero")
    if not np.all(keep):
        logger.warning("dropping %d numerically zero eigenvalue(s)", int(np.sum(~keep)))
        vals, vecs = vals[keep], vecs[:, keep]

    # positives first, each block by decreasing magnitude
    order = np.lexsort((-np.abs(vals), vals < 0))
    vals, vecs = vals[order], vecs[:, order]
    X = vecs * np.sqrt(np.abs(vals))
    J = np.where(vals > 0, 1.0, -1.0)
    return Embedding(X=X, J=J, eigenvalues=vals)
