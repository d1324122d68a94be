"""Geometry of truncated second-order cones.

All functions here work on a single second-order cone block of dimension
d >= 2. The standard truncated cone is the set of cone points with axis
coordinate at most 1; an oblique truncation replaces the axis-orthogonal
cap with a tilted half-space H(w, v) = {x : w^T x <= w^T v}.

Volume convention: the standard truncated cone of dimension d has volume

    V_d = pi^((d-1)/2) / (d * Gamma((d-1)/2 + 1)),

obtained by integrating the volume of the (d-1)-ball of radius r over
r in [0, 1]. Note the factor d in the denominator: the d=2 triangle has
area 1 and the d=3 unit cone has volume pi/3, both of which this formula
reproduces (and Monte Carlo confirms). Only volume *ratios* drive the
solver, so this normalization matters for reporting and tests only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class HalfSpace:
    """Half space {x : w^T x <= w^T v} with normal w and boundary point v."""

    w: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float).reshape(-1))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(-1))
        if self.w.shape != self.v.shape:
            raise ValueError("w and v must have equal dimension")

    @property
    def dim(self) -> int:
        return self.w.size

    def offset(self) -> float:
        """The boundary level w^T v."""
        return float(self.w @ self.v)

    def contains(self, x, tol: float = 0.0) -> bool:
        return float(self.w @ np.asarray(x, dtype=float)) <= self.offset() + tol


@dataclass(frozen=True)
class BlockAutomorphism:
    """A linear automorphism of one second-order cone block.

    Carries the matrix, its determinant (cached; the construction routines
    know it in closed form) and the block dimension.
    """

    matrix: np.ndarray
    det: float
    dim: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x


def _interior_gamma(w: np.ndarray) -> float:
    """sqrt(w0^2 - ||w1||^2) for interior w; raises otherwise."""
    w0 = float(w[0])
    gamma_sq = w0 * w0 - float(w[1:] @ w[1:])
    if gamma_sq <= 0.0 or w0 <= 0.0:
        raise ValueError("vector is not in the interior of the cone")
    return math.sqrt(gamma_sq)


def std_tsoc_volume(d: int) -> float:
    """Volume of the standard truncated second-order cone of dimension d."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    return math.pi ** ((d - 1) / 2.0) / (d * math.gamma((d - 1) / 2.0 + 1.0))


def _rotation_matrix(w: np.ndarray, flip: bool) -> np.ndarray:
    gamma = _interior_gamma(w)
    alpha = float(w[0]) / gamma
    beta = w[1:] / gamma
    if flip:
        beta = -beta
    d = w.size
    g = np.empty((d, d))
    g[0, 0] = alpha
    g[0, 1:] = beta
    g[1:, 0] = beta
    g[1:, 1:] = np.eye(d - 1) + np.outer(beta, beta) / (1.0 + alpha)
    return g


def hyperbolic_rotation(w) -> BlockAutomorphism:
    """Determinant-one automorphism sending the axis point e to w / gamma.

    w must be interior. The matrix is the symmetric hyperbolic rotation
    [[alpha, beta^T], [beta, I + beta beta^T / (1 + alpha)]] with
    alpha = w0 / gamma, beta = w1 / gamma.
    """
    w = np.asarray(w, dtype=float).reshape(-1)
    return BlockAutomorphism(_rotation_matrix(w, flip=False), 1.0, w.size)


def hyperbolic_rotation_inv(w) -> BlockAutomorphism:
    """Inverse of :func:`hyperbolic_rotation` (same form with beta negated)."""
    w = np.asarray(w, dtype=float).reshape(-1)
    return BlockAutomorphism(_rotation_matrix(w, flip=True), 1.0, w.size)


def automorphism_from_cut(h: HalfSpace) -> BlockAutomorphism:
    """Automorphism mapping the standard truncated cone onto C(w, v).

    Requires w and v interior with w^T v > 0. The matrix is
    (w^T v / gamma) times the inverse hyperbolic rotation of w, and its
    determinant is (w^T v / gamma)^d.
    """
    gamma = _interior_gamma(h.w)
    _interior_gamma(h.v)
    wv = h.offset()
    if wv <= 0.0:
        raise ValueError("w^T v must be positive")
    scale = wv / gamma
    matrix = scale * _rotation_matrix(h.w, flip=True)
    return BlockAutomorphism(matrix, scale**h.dim, h.dim)


def otsoc_volume(h: HalfSpace, d: int) -> float:
    """Volume of the obliquely truncated cone C(w, v)."""
    if d != h.dim:
        raise ValueError("dimension mismatch between half space and d")
    gamma = _interior_gamma(h.w)
    wv = h.offset()
    if wv <= 0.0:
        raise ValueError("w^T v must be positive")
    return (wv / gamma) ** d * std_tsoc_volume(d)


def min_volume_normal(v) -> HalfSpace:
    """Normal w minimizing the truncation volume for a boundary point v.

    For interior v the minimizer is w = (v0; -v1), with resulting volume
    (v0^2 - ||v1||^2)^(d/2) * V_d.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    _interior_gamma(v)
    w = v.copy()
    w[1:] = -w[1:]
    return HalfSpace(w, v)


def check_automorphism(g, tol: float = 1e-8) -> bool:
    """Whether g preserves the cone: g^T E g = lam * E with lam > 0 and
    g e interior, where E = diag(1, -I)."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
        return False
    d = g.shape[0]
    e_diag = np.full(d, -1.0)
    e_diag[0] = 1.0
    congruence = g.T @ (e_diag[:, None] * g)
    lam = congruence[0, 0]
    if lam <= 0.0:
        return False
    residual = congruence - np.diag(lam * e_diag)
    if np.abs(residual).max() > tol * max(1.0, abs(lam)):
        return False
    ge = g[:, 0]  # image of the axis point e
    return float(ge[0]) - float(np.linalg.norm(ge[1:])) > 0.0
