"""Orthogonal projection onto the kernel of a full-row-rank matrix.

Two storage strategies sit behind one interface: the explicit dense
projector I - A^T (A A^T)^{-1} A (default for small systems), and a
factored form that keeps only A and a Cholesky factor of A A^T. The
explicit form makes single-block applications cost O(total_dim * d_i)
directly; the factored form trades that for memory.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .exceptions import RankDeficientError

DEFAULT_EXPLICIT_THRESHOLD = 512
DEFAULT_RANK_TOL = 1e-12


def cholesky_with_pivot_check(gram: np.ndarray, rank_tol: float) -> np.ndarray:
    """Lower Cholesky factor of a symmetric PSD matrix.

    Raises RankDeficientError naming the first pivot that falls below
    rank_tol times the largest diagonal entry.
    """
    gram = np.asarray(gram, dtype=float)
    m = gram.shape[0]
    lower = np.zeros_like(gram)
    max_diag = float(gram.diagonal().max(initial=0.0))
    threshold = rank_tol * max(max_diag, np.finfo(float).tiny)
    for j in range(m):
        pivot = gram[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= threshold:
            raise RankDeficientError(j, float(pivot))
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < m:
            lower[j + 1 :, j] = (gram[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[j, j]
    return lower


class Projector:
    """Orthogonal projector onto Ker(A) for a full-row-rank A."""

    def __init__(self, a: np.ndarray, chol: np.ndarray,
                 explicit: Optional[np.ndarray],
                 block_offsets: Optional[np.ndarray]):
        self.a = a
        self._chol = chol
        self._explicit = explicit
        self.block_offsets = block_offsets
        self.m, self.total_dim = a.shape

    @classmethod
    def build(cls, a, block_offsets: Optional[Sequence[int]] = None,
              explicit_threshold: int = DEFAULT_EXPLICIT_THRESHOLD,
              rank_tol: float = DEFAULT_RANK_TOL) -> "Projector":
        """Factor A A^T and, for small systems, form the dense projector."""
        a = np.array(a, dtype=float, copy=True)
        if a.ndim != 2:
            raise ValueError("A must be a matrix")
        m, n = a.shape
        if m > n:
            raise ValueError("A must have no more rows than columns")
        chol = cholesky_with_pivot_check(a @ a.T, rank_tol)
        explicit = None
        if n <= explicit_threshold:
            # I - A^T (A A^T)^{-1} A via two triangular solves
            w = scipy.linalg.solve_triangular(chol, a, lower=True)
            explicit = np.eye(n) - w.T @ w
        offsets = None
        if block_offsets is not None:
            offsets = np.asarray(block_offsets, dtype=np.intp)
        return cls(a, chol, explicit, offsets)

    def _gram_solve(self, rhs: np.ndarray) -> np.ndarray:
        y = scipy.linalg.solve_triangular(self._chol, rhs, lower=True)
        return scipy.linalg.solve_triangular(self._chol.T, y, lower=False)

    def apply(self, x) -> np.ndarray:
        """P x, the component of x in Ker(A)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if self._explicit is not None:
            return self._explicit @ x
        return x - self.a.T @ self._gram_solve(self.a @ x)

    def apply_block(self, i: int, eta_i) -> np.ndarray:
        """P applied to eta_i embedded at block i with zeros elsewhere."""
        if self.block_offsets is None:
            raise ValueError("projector was built without block offsets")
        eta_i = np.asarray(eta_i, dtype=float).reshape(-1)
        start = int(self.block_offsets[i])
        stop = int(self.block_offsets[i + 1])
        if eta_i.size != stop - start:
            raise ValueError("eta_i does not match the block dimension")
        if self._explicit is not None:
            return self._explicit[:, start:stop] @ eta_i
        out = np.zeros(self.total_dim)
        out[start:stop] = eta_i
        rhs = self.a[:, start:stop] @ eta_i
        out -= self.a.T @ self._gram_solve(rhs)
        return out
