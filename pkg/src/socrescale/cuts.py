"""Turn a cut generating block into a half-space with guaranteed shrink.

Given the generating block y_k of a cut generating vector, the surviving
feasible region of block k fits inside an oblique truncation whose volume
is at most 0.96^d_k times the standard one. Two constructions cover the
eccentricity range eta = ||y_k1|| / y_k0:

  case one  (eta <= 0.6):  w = y_k, v = e / sqrt(2); volume ratio
                           (2 (1 - eta^2))^(-d/2)
  case two  (eta >  0.6):  supporting half-space through
                           v = (1; -abar yhat_1), w = (1; abar yhat_1)
                           with abar = (1 - 1/sqrt(2)) / eta^2; ratio
                           (1 - (1.5 - sqrt(2)) / eta^2)^(d/2)

Half-line blocks shrink to [0, 1/sqrt(2)] directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .cones import HALFLINE, SOC
from .tsoc import HalfSpace, otsoc_volume, std_tsoc_volume

INV_SQRT2 = 1.0 / math.sqrt(2.0)
CASE_SWITCH_ETA = 0.6
SHRINK_BASE = 0.96
# case two is valid only past this eccentricity
_CASE_TWO_MIN_ETA = math.sqrt(1.0 - INV_SQRT2)


class CutCase(Enum):
    ONE = "one"
    TWO = "two"
    HALFLINE = "halfline"


@dataclass(frozen=True)
class Cut:
    """A volume-reducing restriction of one block."""

    k: int
    case: CutCase
    eta: float
    volume_factor: float
    halfspace: Optional[HalfSpace]  # None on half-line blocks
    bound: Optional[float]  # 1/sqrt(2) on half-line blocks, else None


def case1_volume_bound(eta: float, d: int) -> float:
    """Volume of the axis-cap truncation at eccentricity eta (valid eta < 1)."""
    if not 0.0 <= eta < 1.0:
        raise ValueError("case one requires 0 <= eta < 1")
    return (2.0 * (1.0 - eta * eta)) ** (-d / 2.0) * std_tsoc_volume(d)


def case2_volume_bound(eta: float, d: int) -> float:
    """Volume of the supporting-plane truncation (valid eta > sqrt(1 - 1/sqrt(2)))."""
    if eta <= _CASE_TWO_MIN_ETA:
        raise ValueError("case two requires eta > sqrt(1 - 1/sqrt(2))")
    return (1.0 - (1.5 - math.sqrt(2.0)) / (eta * eta)) ** (d / 2.0) * std_tsoc_volume(d)


def build_cut(y_k, kind: str, d_k: int, k: int = 0) -> Cut:
    """Construct the cut for generating block y_k.

    y_k must lie in its cone with positive axis coordinate. Eccentricities
    within 1e-10 of 1 are clamped to 1 (the case-two formulas stay valid
    there); anything larger means y_k is outside the cone.
    """
    y_k = np.asarray(y_k, dtype=float).reshape(-1)
    if y_k.size != d_k:
        raise ValueError("y_k does not match the block dimension")
    if kind == HALFLINE:
        return Cut(k=k, case=CutCase.HALFLINE, eta=0.0,
                   volume_factor=INV_SQRT2, halfspace=None, bound=INV_SQRT2)
    if kind != SOC:
        raise ValueError(f"unknown block kind {kind!r}")

    y0 = float(y_k[0])
    if y0 <= 0.0:
        raise ValueError("generating block must have positive axis coordinate")
    eta = float(np.linalg.norm(y_k[1:])) / y0
    if eta > 1.0 + 1e-10:
        raise ValueError(f"generating block is outside the cone (eta = {eta!r})")
    if eta > 1.0 - 1e-10:
        eta = 1.0

    e_k = np.zeros(d_k)
    e_k[0] = 1.0
    if eta <= CASE_SWITCH_ETA:
        case = CutCase.ONE
        halfspace = HalfSpace(y_k.copy(), e_k * INV_SQRT2)
    else:
        case = CutCase.TWO
        abar = (1.0 - INV_SQRT2) / (eta * eta)
        yhat_tail = y_k[1:] / y0
        w = np.concatenate(([1.0], abar * yhat_tail))
        v = np.concatenate(([1.0], -abar * yhat_tail))
        halfspace = HalfSpace(w, v)

    factor = otsoc_volume(halfspace, d_k) / std_tsoc_volume(d_k)
    if factor > SHRINK_BASE**d_k + 1e-12:
        raise ValueError(
            f"cut volume factor {factor!r} exceeds {SHRINK_BASE}^{d_k}"
        )
    return Cut(k=k, case=case, eta=eta, volume_factor=factor,
               halfspace=halfspace, bound=None)
