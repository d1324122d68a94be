"""Standard-form SOCP driver built on the homogeneous feasibility solver.

An inhomogeneous system A x = b, x in K becomes homogeneous by adding a
half-line block for a scaling variable tau and the column -b; interior
solutions have tau > 0 and divide back. A primal-dual pair with interior
feasible points is solved to a target duality gap in two phases: phase
one finds any interior feasible pair by homogenizing the stacked system

    A x = b,        N^T s = N^T c

(N an orthonormal kernel basis of A, which eliminates the free dual
multiplier y), and phase two re-solves with the duality gap pinned into
[0, 2 t M] through two extra half-line slacks, where M is the phase-one
gap. The gap is linear in (x, s): with xbar any fixed solution of
A xbar = b one has b^T y = xbar^T (c - s), hence
gap = c^T x + xbar^T s - c^T xbar.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .cones import (
    BlockVector,
    ConeStructure,
    halfline,
    lambda_max,
    lambda_min,
)
from .exceptions import CertificateError, NoInteriorPairError
from .instances import Instance
from .solver import (
    DUAL_NONZERO,
    PRIMAL_INTERIOR,
    SolveResult,
    SolverOptions,
    solve,
)

logger = logging.getLogger("socrescale")


@dataclass
class StandardSocp:
    """min c^T x s.t. A x = b, x in K, with dual max b^T y, c - A^T y in K."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    structure: ConeStructure

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.structure.total_dim
        if self.a.shape != (self.b.size, n) or self.c.size != n:
            raise ValueError("inconsistent problem dimensions")

    @classmethod
    def from_instance(cls, inst: Instance) -> "StandardSocp":
        if inst.b is None or inst.c is None:
            raise ValueError("instance has no objective data (b, c)")
        return cls(inst.a, inst.b, inst.c, inst.structure)


@dataclass
class PhaseResult:
    x: BlockVector
    y: np.ndarray
    s: BlockVector
    gap: float
    eps_hat: float
    M: float
    feasibility: Optional[SolveResult] = None


def homogenize_feasibility(a, b, structure: ConeStructure) -> Tuple[np.ndarray, ConeStructure]:
    """Append a half-line scaling block and the column -b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape[0] != b.size:
        raise ValueError("A and b disagree on the number of rows")
    a_h = np.hstack([a, -b[:, None]])
    structure_h = ConeStructure(list(structure.blocks) + [halfline()])
    return a_h, structure_h


def solve_homogenized(a, b, structure: ConeStructure,
                      opts: Optional[SolverOptions] = None) -> Tuple[Optional[BlockVector], SolveResult]:
    """Interior solution of A x = b, x in K via the homogeneous solver.

    Returns (x, feasibility result); x is None when the run produced a
    dual certificate, i.e. the system has no interior solution.
    """
    a_h, structure_h = homogenize_feasibility(a, b, structure)
    result = solve(a_h, structure_h, 0.0, opts)
    if result.status != PRIMAL_INTERIOR:
        return None, result
    data = result.x.data
    tau = float(data[-1])
    if tau <= 0.0:
        raise CertificateError("interior homogeneous solution with tau <= 0")
    x = BlockVector(data[:-1] / tau, structure)
    return x, result


def _kernel_basis(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis of Ker(A) as rows."""
    basis = scipy.linalg.null_space(a)
    if basis.shape[1] != a.shape[1] - a.shape[0]:
        raise ValueError("A is not full row rank")
    return basis.T


def _stacked_pair_system(p: StandardSocp) -> Tuple[np.ndarray, np.ndarray, ConeStructure, np.ndarray]:
    """Constraint matrix and rhs for {A x = b, N^T s = N^T c} over K x K."""
    m, n = p.a.shape
    kernel_rows = _kernel_basis(p.a)
    rows = kernel_rows.shape[0]
    top = np.hstack([p.a, np.zeros((m, n))])
    bottom = np.hstack([np.zeros((rows, n)), kernel_rows])
    lhs = np.vstack([top, bottom])
    rhs = np.concatenate([p.b, kernel_rows @ p.c])
    structure2 = ConeStructure(list(p.structure.blocks) * 2)
    return lhs, rhs, structure2, kernel_rows


def _recover_y(p: StandardSocp, s: np.ndarray) -> np.ndarray:
    return np.linalg.lstsq(p.a.T, p.c - s, rcond=None)[0]


def _phase_outputs(p: StandardSocp, x: np.ndarray, s: np.ndarray,
                   feasibility: SolveResult, M: Optional[float]) -> PhaseResult:
    xv = BlockVector(x, p.structure)
    sv = BlockVector(s, p.structure)
    y = _recover_y(p, s)
    gap = float(p.c @ x - p.b @ y)
    eps_hat = min(lambda_min(xv), lambda_min(sv), 1.0)
    return PhaseResult(x=xv, y=y, s=sv, gap=gap, eps_hat=eps_hat,
                       M=gap if M is None else M, feasibility=feasibility)


def phase1(p: StandardSocp, opts: Optional[SolverOptions] = None) -> PhaseResult:
    """Interior feasible pair for the primal and dual constraint sets.

    Raises NoInteriorPairError when the stacked system has no interior
    point, i.e. the standing assumption fails.
    """
    lhs, rhs, structure2, _ = _stacked_pair_system(p)
    pair, feas = solve_homogenized(lhs, rhs, structure2, opts)
    if pair is None:
        raise NoInteriorPairError(
            "the primal-dual pair has no strictly interior feasible point",
            certificate=feas,
        )
    n = p.structure.total_dim
    return _phase_outputs(p, pair.data[:n], pair.data[n:], feas, M=None)


def phase2(p: StandardSocp, first: PhaseResult, t: float,
           opts: Optional[SolverOptions] = None) -> PhaseResult:
    """Feasible pair with duality gap pinned into [0, 2 t M], 0 < t <= 1/2.

    A zero phase-one gap already proves optimality, in which case the
    phase-one point is returned unchanged.
    """
    if not 0.0 < t <= 0.5:
        raise ValueError("t must lie in (0, 1/2]")
    M = first.M
    gap_scale = abs(float(p.c @ first.x.data)) + abs(float(p.b @ first.y)) + 1.0
    if M <= 1e-14 * gap_scale:
        logger.debug("phase one gap already zero; phase two is vacuous")
        return first

    m, n = p.a.shape
    lhs, rhs, structure2, _ = _stacked_pair_system(p)
    xbar = np.linalg.lstsq(p.a, p.b, rcond=None)[0]
    const = float(p.c @ xbar)
    rows = lhs.shape[0]
    # columns: x (n), s (n), gap slack q1, headroom slack q2
    lhs_t = np.zeros((rows + 2, 2 * n + 2))
    lhs_t[:rows, : 2 * n] = lhs
    gap_row = np.concatenate([p.c, xbar])
    lhs_t[rows, : 2 * n] = gap_row
    lhs_t[rows, 2 * n] = -1.0
    lhs_t[rows + 1, : 2 * n] = gap_row
    lhs_t[rows + 1, 2 * n + 1] = 1.0
    rhs_t = np.concatenate([rhs, [const, const + 2.0 * t * M]])
    structure_t = ConeStructure(list(structure2.blocks) + [halfline(), halfline()])

    point, feas = solve_homogenized(lhs_t, rhs_t, structure_t, opts)
    if point is None:
        raise NoInteriorPairError(
            "gap-restricted system unexpectedly has no interior point",
            certificate=feas,
        )
    return _phase_outputs(p, point.data[:n], point.data[n : 2 * n], feas, M=M)


def solve_to_gap(p: StandardSocp, delta: float,
                 opts: Optional[SolverOptions] = None) -> PhaseResult:
    """Feasible primal-dual pair with duality gap at most delta."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    first = phase1(p, opts)
    M = first.M
    if M <= delta:
        return first
    t = min(0.5, delta / (2.0 * M))
    return phase2(p, first, t, opts)


def cond_upper_bound(x_with_tau: BlockVector) -> float:
    """Eigenvalue-ratio bound on the homogenized condition number.

    Takes the homogeneous vector (x; tau) with its trailing half-line
    block, normalizes tau to 1 and returns lambda_max / lambda_min of the
    result (infinite on the boundary).
    """
    structure = x_with_tau.structure
    if structure.kind(structure.n - 1) != "halfline":
        raise ValueError("expected a trailing half-line scaling block")
    tau = x_with_tau.head(structure.n - 1)
    if tau <= 0.0:
        return math.inf
    scaled = BlockVector(x_with_tau.data / tau, structure)
    lo = lambda_min(scaled)
    if lo <= 0.0:
        return math.inf
    return lambda_max(scaled) / lo
