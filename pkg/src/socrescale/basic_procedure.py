"""Inner iteration: von Neumann steps on the projected simplex.

Maintains an iterate y with e^T y = 1 and y strictly interior, and its
kernel projection z = P y. Each update replaces (y, z) by a convex
combination chosen so 1/||z||^2 grows by at least 1/2, which bounds the
number of iterations by ceil(8 n^3) + 8 for n blocks. Termination is by
one of three exits: z interior (primal solution of the projected system),
z numerically zero (y itself is a nonzero dual point), or the cut
inequality 2 sqrt(n) ||z|| <= y_k0 for some block k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .cones import (
    SOC,
    BlockVector,
    ConeStructure,
    block_min_eigs,
    block_sq_norms,
)
from .exceptions import (
    DegenerateStepError,
    IterationCapExceededError,
    NotApplicableError,
    ProgressViolatedError,
)


class BasicStatus(Enum):
    CUT = "cut"
    PRIMAL_INTERIOR = "primal_interior"
    DUAL_NONZERO = "dual_nonzero"


@dataclass
class BasicProcedureOptions:
    max_iters: Optional[int] = None  # None -> ceil(8 n^3) + 8
    tol_zero: float = 1e-12
    progress_slack: float = 1e-6

    def resolved_max_iters(self, n_blocks: int) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return 8 * n_blocks**3 + 8


@dataclass
class BasicOutcome:
    """Result of one inner run.

    status CUT:            y is a cut generating vector with block index k.
    status PRIMAL_INTERIOR: z = P y is interior and lies in Ker(A).
    status DUAL_NONZERO:    y is nonzero, in the cone, with P y ~ 0.
    """

    status: BasicStatus
    y: Optional[BlockVector]
    k: Optional[int]
    z: Optional[BlockVector]
    iterations: int
    inv_sq_final: float
    min_progress: Optional[float]


def cut_block_index(z: BlockVector, y: BlockVector) -> Optional[int]:
    """Smallest block k with 2 sqrt(n) ||z|| <= y_k0, or None."""
    structure = y.structure
    threshold = 2.0 * math.sqrt(structure.n) * float(np.linalg.norm(z.data))
    hits = y.data[structure.heads] >= threshold
    if not hits.any():
        return None
    return int(np.argmax(hits))


def opposing_cone_vector(z_i, kind: str, tol: float = 0.0) -> np.ndarray:
    """A cone vector eta_i with axis coordinate 1 and eta_i^T z_i <= 0.

    Defined when z_i is neither interior nor zero (at slack tol). On
    half-lines eta_i = 1. On cone blocks eta_i = e when z_i0 <= 0, else
    e - (zhat - e)/||zhat - e|| with zhat = z_i / z_i0. Always satisfies
    ||eta_i||^2 <= 2.
    """
    z_i = np.asarray(z_i, dtype=float).reshape(-1)
    if kind != SOC:
        if z_i[0] > tol:
            raise NotApplicableError("half-line block is interior")
        return np.ones(1)
    norm_z = float(np.linalg.norm(z_i))
    if norm_z <= tol:
        raise NotApplicableError("block is numerically zero")
    z0 = float(z_i[0])
    if z0 - float(np.linalg.norm(z_i[1:])) > tol:
        raise NotApplicableError("block is interior")
    d = z_i.size
    eta = np.zeros(d)
    eta[0] = 1.0
    if z0 <= 0.0:
        return eta
    u = z_i / z0
    u[0] = 0.0  # zhat - e
    u_norm = float(np.linalg.norm(u))
    # ||zhat - e|| >= 1 whenever zhat is not interior; smaller values can
    # only arise from rounding, in which case the block is really interior.
    if u_norm < 1.0 - 1e-10:
        raise NotApplicableError("block is interior up to rounding")
    return eta - u / u_norm


def von_neumann_step(y: np.ndarray, z: np.ndarray, eta: np.ndarray,
                     p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One convex-combination update of (y, z).

    With alpha = p^T (p - z) / ||z - p||^2 the new projection
    alpha z + (1 - alpha) p is the point of the segment [z, p] closest to
    the origin; alpha lies in (0, 1) whenever p^T z <= 0 and both are
    nonzero, and then 1/||z~||^2 >= 1/||z||^2 + 1/2 given ||p||^2 <= 2.
    """
    diff = z - p
    denom = float(diff @ diff)
    scale = float(np.linalg.norm(z) + np.linalg.norm(p))
    if denom <= (1e-14 * scale) ** 2:
        raise DegenerateStepError("z and p coincide")
    alpha = float(p @ (p - z)) / denom
    return alpha * y + (1.0 - alpha) * eta, alpha * z + (1.0 - alpha) * p


def _select_block(z: np.ndarray, structure: ConeStructure,
                  tol_zero: float) -> Tuple[int, np.ndarray]:
    """Choose a non-interior block and its opposing vector.

    Preference order: among non-interior blocks with nonnegligible norm,
    the one minimizing lambda_min(z_i) / ||z_i|| (most violating), ties to
    the lowest index. Blocks that turn out interior at rounding level are
    skipped. If every non-interior block is numerically zero, any of them
    works with eta_i = e_i since then eta^T z ~ 0.
    """
    mins = block_min_eigs(z, structure)
    norms = np.sqrt(block_sq_norms(z, structure))
    non_interior = mins <= 0.0
    candidates = non_interior & (norms > tol_zero)
    if candidates.any():
        ratio = np.where(candidates, mins / np.maximum(norms, 1e-300), np.inf)
        order = np.argsort(ratio, kind="stable")
        for i in order:
            if not candidates[i]:
                break
            try:
                sl = structure.block_slice(int(i))
                eta_i = opposing_cone_vector(z[sl], structure.kind(int(i)),
                                             tol=tol_zero)
                return int(i), eta_i
            except NotApplicableError:
                continue
    # Degenerate fallback: a zero non-interior block; e_i opposes it trivially.
    for i in range(structure.n):
        if non_interior[i]:
            eta_i = np.zeros(structure.dim(i))
            eta_i[0] = 1.0
            return i, eta_i
    raise ProgressViolatedError("projection is interior but was not detected")


def run(projector, structure: ConeStructure, y_in: BlockVector,
        opts: Optional[BasicProcedureOptions] = None) -> BasicOutcome:
    """Run the inner procedure until one of the three exits fires.

    y_in must satisfy e^T y = 1 (within 1e-12) and be strictly interior.
    Raises IterationCapExceededError past the iteration bound and
    ProgressViolatedError if a step falls short of the 1/2 progress law;
    both signal numerical breakdown, not expected operation.
    """
    opts = opts or BasicProcedureOptions()
    n = structure.n
    heads = structure.heads
    y = y_in.data.copy()
    head_sum = float(y[heads].sum())
    if abs(head_sum - 1.0) > 1e-12:
        raise ValueError(f"e^T y must be 1, got {head_sum!r}")
    if block_min_eigs(y, structure).min() <= 0.0:
        raise ValueError("initial y must be strictly interior")

    max_iters = opts.resolved_max_iters(n)
    two_sqrt_n = 2.0 * math.sqrt(n)
    z = projector.apply(y)
    z_fresh = True  # z recomputed from y since the last update
    iterations = 0
    min_progress: Optional[float] = None

    def outcome(status, y_vec=None, k=None, z_vec=None):
        nz = float(np.linalg.norm(z_vec)) if z_vec is not None else 0.0
        inv_sq = 1.0 / (nz * nz) if nz > 0.0 else math.inf
        return BasicOutcome(
            status=status,
            y=BlockVector(y_vec, structure) if y_vec is not None else None,
            k=k,
            z=BlockVector(z_vec, structure) if z_vec is not None else None,
            iterations=iterations,
            inv_sq_final=inv_sq,
            min_progress=min_progress,
        )

    while True:
        norm_z = float(np.linalg.norm(z))
        exit_fires = (
            norm_z <= opts.tol_zero * float(np.linalg.norm(y))
            or block_min_eigs(z, structure).min() > 0.0
            or (y[heads] >= two_sqrt_n * norm_z).any()
        )
        # the running z = alpha z + (1 - alpha) p drifts from P y; confirm
        # any exit on a freshly projected iterate before returning
        if exit_fires and not z_fresh:
            z = projector.apply(y)
            z_fresh = True
            norm_z = float(np.linalg.norm(z))
        # exit (a): y is already a dual point
        if norm_z <= opts.tol_zero * float(np.linalg.norm(y)):
            return outcome(BasicStatus.DUAL_NONZERO, y_vec=y, z_vec=z)
        # exit (b): the projection is interior, no slack
        if block_min_eigs(z, structure).min() > 0.0:
            return outcome(BasicStatus.PRIMAL_INTERIOR, y_vec=y, z_vec=z)
        # exit (c): cut inequality for some block
        hits = y[heads] >= two_sqrt_n * norm_z
        if hits.any():
            return outcome(BasicStatus.CUT, y_vec=y, k=int(np.argmax(hits)),
                           z_vec=z)

        if iterations >= max_iters:
            raise IterationCapExceededError(
                f"no exit after {iterations} iterations (cap {max_iters})"
            )

        i, eta_i = _select_block(z, structure, opts.tol_zero)
        sl = structure.block_slice(i)
        correlation = float(eta_i @ z[sl])
        block_norm = float(np.linalg.norm(z[sl]))
        if correlation > 1e-10 * max(block_norm, opts.tol_zero):
            raise ProgressViolatedError(
                f"opposing vector correlates with z on block {i}"
            )

        p = projector.apply_block(i, eta_i)
        norm_p = float(np.linalg.norm(p))
        # exits on p mirror the ones on z
        if norm_p <= opts.tol_zero * float(np.linalg.norm(eta_i)):
            eta_full = np.zeros(structure.total_dim)
            eta_full[sl] = eta_i
            return outcome(BasicStatus.DUAL_NONZERO, y_vec=eta_full, z_vec=p)
        if block_min_eigs(p, structure).min() > 0.0:
            eta_full = np.zeros(structure.total_dim)
            eta_full[sl] = eta_i
            return outcome(BasicStatus.PRIMAL_INTERIOR, y_vec=eta_full, z_vec=p)

        eta_full = np.zeros(structure.total_dim)
        eta_full[sl] = eta_i
        inv_before = 1.0 / (norm_z * norm_z)
        y, z = von_neumann_step(y, z, eta_full, p)
        z_fresh = False
        iterations += 1
        nz_after = float(np.linalg.norm(z))
        inv_after = 1.0 / (nz_after * nz_after) if nz_after > 0 else math.inf
        progress = inv_after - inv_before
        if progress < 0.5 - opts.progress_slack:
            raise ProgressViolatedError(
                f"1/||z||^2 grew by {progress:.3e} < 1/2 at iteration {iterations}"
            )
        if min_progress is None or progress < min_progress:
            min_progress = progress
