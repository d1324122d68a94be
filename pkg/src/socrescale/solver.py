"""Outer loop: repeated inner runs with per-block automorphism rescaling.

Each outer iteration runs the inner procedure on the current scaled
matrix. A cut outcome shrinks one block by an automorphism whose
determinant is at most 0.96^d_k, recorded in a per-block ledger; once a
block's ledger falls to epsilon^d_k, no epsilon-interior solution exists.
Primal and dual outcomes are mapped back to original coordinates (the
dual through the inverse-transpose of the accumulated scaling, which
keeps it in the cone and in the row space of the original matrix) and
re-verified before they are returned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from . import instances
from .basic_procedure import BasicOutcome, BasicProcedureOptions, BasicStatus, run
from .cones import HALFLINE, BlockVector, ConeStructure, identity
from .cuts import Cut, CutCase, INV_SQRT2, SHRINK_BASE, build_cut
from .exceptions import CertificateError, OuterCapExceededError, RankDeficientError
from .projection import DEFAULT_EXPLICIT_THRESHOLD, DEFAULT_RANK_TOL, Projector
from .tsoc import automorphism_from_cut

logger = logging.getLogger("socrescale")

PRIMAL_INTERIOR = instances.PRIMAL_INTERIOR
DUAL_NONZERO = instances.DUAL_NONZERO
NO_EPS_INTERIOR = instances.NO_EPS_INTERIOR


@dataclass
class SolverOptions:
    max_outer: Optional[int] = None  # None -> n * ceil(ln eps / ln 0.96) + n, or 10^6 at eps = 0
    bp: BasicProcedureOptions = field(default_factory=BasicProcedureOptions)
    explicit_threshold: int = DEFAULT_EXPLICIT_THRESHOLD
    rank_tol: float = DEFAULT_RANK_TOL
    verify_tol: float = 1e-8
    record_cuts: bool = True
    renorm_low: float = 1e-8
    renorm_high: float = 1e8


@dataclass
class CutRecord:
    t: int
    k: int
    case: str
    eta: float
    volume_factor: float
    w: Optional[np.ndarray]
    v: Optional[np.ndarray]


@dataclass
class SolverStats:
    bp_calls: int = 0
    bp_iterations_total: int = 0
    bp_iterations_max: int = 0
    outer_iterations: int = 0
    cuts_per_block: Optional[List[int]] = None
    v: Optional[List[float]] = None
    min_progress: Optional[float] = None
    cut_records: List[CutRecord] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "bp_calls": self.bp_calls,
            "bp_iterations_total": self.bp_iterations_total,
            "bp_iterations_max": self.bp_iterations_max,
            "outer_iterations": self.outer_iterations,
            "cuts_per_block": list(self.cuts_per_block or []),
            "v": list(self.v or []),
        }


@dataclass
class SolveResult:
    status: str
    epsilon: float
    x: Optional[BlockVector] = None
    s: Optional[BlockVector] = None
    u: Optional[np.ndarray] = None
    block: Optional[int] = None
    v_k: Optional[float] = None
    residual_inf: Optional[float] = None  # |A x|_inf or |s + A^T u|_inf
    stats: Optional[SolverStats] = None

    def to_certificate(self) -> instances.Certificate:
        return instances.Certificate(
            status=self.status,
            epsilon=self.epsilon,
            x=None if self.x is None else self.x.data,
            s=None if self.s is None else self.s.data,
            u=self.u,
            block=self.block,
            v_k=self.v_k,
            stats=None if self.stats is None else self.stats.as_dict(),
        )


class SolverState:
    """Scaled matrix, accumulated per-block automorphisms and their ledger."""

    def __init__(self, a: np.ndarray, structure: ConeStructure):
        self.structure = structure
        self.a_t = np.array(a, dtype=float, copy=True)
        self.t = 0
        self.m_blocks: List[np.ndarray] = [
            np.eye(structure.dim(i)) for i in range(structure.n)
        ]
        self.v = np.ones(structure.n)
        self.cuts_per_block = np.zeros(structure.n, dtype=int)
        self._col_norm_ref = self._column_norms()

    def _column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.a_t, axis=0)

    def ledger_consistent(self, rtol: float = 1e-8) -> bool:
        for k, m_k in enumerate(self.m_blocks):
            det = float(np.linalg.det(m_k))
            if abs(det - self.v[k]) > rtol * max(abs(self.v[k]), 1e-300):
                return False
        return True

    def map_primal(self, x_scaled: BlockVector) -> BlockVector:
        """Original-coordinate point M x~ (blockwise)."""
        out = np.empty(self.structure.total_dim)
        for k, m_k in enumerate(self.m_blocks):
            sl = self.structure.block_slice(k)
            out[sl] = m_k @ x_scaled.data[sl]
        return BlockVector(out, self.structure, copy=False)

    def map_dual(self, y_scaled: BlockVector,
                 a_original: np.ndarray) -> tuple:
        """Original-coordinate dual pair (s, u) from a scaled dual point.

        Solves M_k^T s_k = y_k per block; the result stays in the cone
        (automorphisms are closed under transpose and inverse) and lies in
        the row space of the original matrix, from which u is recovered by
        least squares.
        """
        s = np.empty(self.structure.total_dim)
        for k, m_k in enumerate(self.m_blocks):
            sl = self.structure.block_slice(k)
            if m_k.shape[0] == 1:
                s[sl] = y_scaled.data[sl] / m_k[0, 0]
            else:
                s[sl] = np.linalg.solve(m_k.T, y_scaled.data[sl])
        u = instances.recover_multiplier(a_original, s)
        return BlockVector(s, self.structure, copy=False), u


def apply_rescale(state: SolverState, cut: Cut) -> SolverState:
    """Shrink block k of the scaled matrix and update ledger and scaling."""
    k = cut.k
    sl = state.structure.block_slice(k)
    if cut.case == CutCase.HALFLINE:
        state.a_t[:, sl] *= INV_SQRT2
        state.m_blocks[k] = state.m_blocks[k] * INV_SQRT2
        state.v[k] *= INV_SQRT2
    else:
        g = automorphism_from_cut(cut.halfspace)
        state.a_t[:, sl] = state.a_t[:, sl] @ g.matrix
        state.m_blocks[k] = state.m_blocks[k] @ g.matrix
        state.v[k] *= g.det
    state.cuts_per_block[k] += 1
    return state


def no_eps_check(state: SolverState, epsilon: float) -> Optional[int]:
    """First block whose ledger certifies no epsilon-interior solution."""
    if epsilon <= 0.0:
        return None
    for k in range(state.structure.n):
        if state.v[k] <= epsilon ** state.structure.dim(k):
            return k
    return None


def map_primal(m_blocks: List[np.ndarray], x_scaled: BlockVector) -> BlockVector:
    state_like = SolverState.__new__(SolverState)
    state_like.structure = x_scaled.structure
    state_like.m_blocks = m_blocks
    return SolverState.map_primal(state_like, x_scaled)


def map_dual(m_blocks: List[np.ndarray], y_scaled: BlockVector,
             a_original: np.ndarray) -> tuple:
    state_like = SolverState.__new__(SolverState)
    state_like.structure = y_scaled.structure
    state_like.m_blocks = m_blocks
    return SolverState.map_dual(state_like, y_scaled, a_original)


def default_outer_cap(n_blocks: int, epsilon: float,
                      max_outer: Optional[int]) -> int:
    if max_outer is not None:
        return max_outer
    if epsilon > 0.0:
        per_block = max(0, math.ceil(math.log(epsilon) / math.log(SHRINK_BASE)))
        return n_blocks * per_block + n_blocks
    return 1_000_000


def _renormalize_if_needed(state: SolverState, opts: SolverOptions) -> None:
    """Replace the scaled matrix by a row-orthonormal equivalent on drift.

    Any invertible row operation leaves the kernel (hence the problem)
    unchanged; it only protects the Gram factorization from badly scaled
    data. The drift reference is reset afterwards.
    """
    norms = state._column_norms()
    ref = np.maximum(state._col_norm_ref, np.finfo(float).tiny)
    ratio = norms / ref
    if (ratio < opts.renorm_low).any() or (ratio > opts.renorm_high).any():
        q, r = np.linalg.qr(state.a_t.T, mode="reduced")
        diag = np.abs(np.diag(r))
        if diag.min() <= opts.rank_tol * max(diag.max(), 1.0):
            raise RankDeficientError(int(np.argmin(diag)), float(diag.min()))
        state.a_t = q.T.copy()
        state._col_norm_ref = state._column_norms()
        logger.debug("renormalized scaled matrix at outer iteration %d", state.t)


def _verify_or_raise(inst: instances.Instance, result: SolveResult,
                     tol: float) -> None:
    report = instances.verify_certificate(inst, result.to_certificate(), tol)
    if not report.ok:
        raise CertificateError(
            "certificate failed re-verification in original coordinates:\n"
            + report.render()
        )


def solve(a, structure: ConeStructure, epsilon: float,
          opts: Optional[SolverOptions] = None) -> SolveResult:
    """Find an interior kernel point, a nonzero dual point, or declare
    that no epsilon-interior solution exists.

    a must have full row rank. epsilon >= 0; at epsilon = 0 the
    no-interior declaration is disabled and only the outer cap stops an
    infeasible run.
    """
    opts = opts or SolverOptions()
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    a0 = np.array(a, dtype=float, copy=True)
    if a0.ndim != 2 or a0.shape[1] != structure.total_dim:
        raise ValueError("A must be m x total_dim")
    inst = instances.Instance(structure, a0)
    state = SolverState(a0, structure)
    stats = SolverStats(
        cuts_per_block=[0] * structure.n,
        v=[1.0] * structure.n,
    )
    cap = default_outer_cap(structure.n, epsilon, opts.max_outer)
    y_in = identity(structure)
    y_in = BlockVector(y_in.data / structure.n, structure, copy=False)

    def finish(result: SolveResult) -> SolveResult:
        stats.outer_iterations = state.t
        stats.cuts_per_block = state.cuts_per_block.tolist()
        stats.v = state.v.tolist()
        result.stats = stats
        return result

    while True:
        projector = Projector.build(
            state.a_t,
            block_offsets=structure.offsets,
            explicit_threshold=opts.explicit_threshold,
            rank_tol=opts.rank_tol,
        )
        outcome: BasicOutcome = run(projector, structure, y_in, opts.bp)
        stats.bp_calls += 1
        stats.bp_iterations_total += outcome.iterations
        stats.bp_iterations_max = max(stats.bp_iterations_max, outcome.iterations)
        if outcome.min_progress is not None:
            if stats.min_progress is None or outcome.min_progress < stats.min_progress:
                stats.min_progress = outcome.min_progress

        if outcome.status == BasicStatus.PRIMAL_INTERIOR:
            x = state.map_primal(outcome.z)
            resid = float(np.abs(a0 @ x.data).max())
            result = finish(SolveResult(PRIMAL_INTERIOR, epsilon, x=x,
                                        residual_inf=resid))
            _verify_or_raise(inst, result, opts.verify_tol)
            return result
        if outcome.status == BasicStatus.DUAL_NONZERO:
            s, u = state.map_dual(outcome.y, a0)
            resid = float(np.abs(s.data + a0.T @ u).max())
            result = finish(SolveResult(DUAL_NONZERO, epsilon, s=s, u=u,
                                        residual_inf=resid))
            _verify_or_raise(inst, result, opts.verify_tol)
            return result

        # cut outcome
        k = outcome.k
        cut = build_cut(outcome.y.block(k), structure.kind(k),
                        structure.dim(k), k=k)
        apply_rescale(state, cut)
        if opts.record_cuts:
            stats.cut_records.append(CutRecord(
                t=state.t, k=k, case=cut.case.value, eta=cut.eta,
                volume_factor=cut.volume_factor,
                w=None if cut.halfspace is None else cut.halfspace.w.copy(),
                v=None if cut.halfspace is None else cut.halfspace.v.copy(),
            ))
        logger.debug(
            "outer %d: cut on block %d (case %s, eta %.4f), ledger %.3e",
            state.t, k, cut.case.value, cut.eta, state.v[k],
        )

        bad = no_eps_check(state, epsilon)
        if bad is not None:
            result = finish(SolveResult(NO_EPS_INTERIOR, epsilon, block=bad,
                                        v_k=float(state.v[bad])))
            _verify_or_raise(inst, result, opts.verify_tol)
            return result

        state.t += 1
        if state.t > cap:
            raise OuterCapExceededError(
                f"no outcome after {state.t} outer iterations (cap {cap})"
            )
        _renormalize_if_needed(state, opts)


def solve_instance(inst: instances.Instance, epsilon: float,
                   opts: Optional[SolverOptions] = None) -> SolveResult:
    return solve(inst.a, inst.structure, epsilon, opts)
