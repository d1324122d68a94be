"""Algebra of direct products of half-lines and second-order cones.

A cone structure is an ordered list of blocks, each either a half-line
(dimension 1) or a second-order cone (dimension >= 2). Vectors over a
structure are stored flat; within a second-order cone block, component 0
is the center-axis coordinate and the remaining components form the
rotational part.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

HALFLINE = "halfline"
SOC = "soc"


@dataclass(frozen=True)
class Block:
    kind: str
    dim: int = 1

    def __post_init__(self):
        if self.kind not in (HALFLINE, SOC):
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.kind == HALFLINE and self.dim != 1:
            raise ValueError("half-line blocks have dimension 1")
        if self.kind == SOC and self.dim < 2:
            raise ValueError("second-order cone blocks need dimension >= 2")


def soc(dim: int) -> Block:
    return Block(SOC, dim)


def halfline() -> Block:
    return Block(HALFLINE, 1)


class ConeStructure:
    """Ordered product of half-line and second-order cone blocks."""

    __slots__ = ("blocks", "dims", "offsets", "heads", "is_soc", "total_dim")

    def __init__(self, blocks: Iterable[Union[Block, tuple]]):
        normalized = []
        for b in blocks:
            if not isinstance(b, Block):
                b = Block(*b)
            normalized.append(b)
        if not normalized:
            raise ValueError("a cone structure needs at least one block")
        self.blocks = tuple(normalized)
        self.dims = np.array([b.dim for b in self.blocks], dtype=np.intp)
        self.offsets = np.zeros(len(self.blocks) + 1, dtype=np.intp)
        np.cumsum(self.dims, out=self.offsets[1:])
        self.heads = self.offsets[:-1].copy()
        self.is_soc = np.array([b.kind == SOC for b in self.blocks])
        self.total_dim = int(self.offsets[-1])

    @property
    def n(self) -> int:
        """Number of blocks."""
        return len(self.blocks)

    def kind(self, i: int) -> str:
        return self.blocks[i].kind

    def dim(self, i: int) -> int:
        return self.blocks[i].dim

    def block_slice(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    @classmethod
    def parse(cls, text: str) -> "ConeStructure":
        """Parse a compact block list such as ``"soc:3,halfline,soc:2"``."""
        blocks = []
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            if item == HALFLINE:
                blocks.append(halfline())
            elif item.startswith(SOC + ":"):
                blocks.append(soc(int(item.split(":", 1)[1])))
            else:
                raise ValueError(f"cannot parse block spec {item!r}")
        return cls(blocks)

    def spec_string(self) -> str:
        parts = []
        for b in self.blocks:
            parts.append(HALFLINE if b.kind == HALFLINE else f"{SOC}:{b.dim}")
        return ",".join(parts)

    def __eq__(self, other):
        return isinstance(other, ConeStructure) and self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def __repr__(self):
        return f"ConeStructure({self.spec_string()!r})"


class BlockVector:
    """A vector in R^total_dim partitioned by a cone structure."""

    __slots__ = ("data", "structure")

    def __init__(self, data, structure: ConeStructure, copy: bool = True):
        arr = np.array(data, dtype=float, copy=copy).reshape(-1)
        if arr.shape != (structure.total_dim,):
            raise ValueError(
                f"data has length {arr.size}, structure needs {structure.total_dim}"
            )
        self.data = arr
        self.structure = structure

    def block(self, i: int) -> np.ndarray:
        return self.data[self.structure.block_slice(i)]

    def head(self, i: int) -> float:
        """Center-axis coordinate of block i (the value itself on half-lines)."""
        return float(self.data[self.structure.heads[i]])

    def tail(self, i: int) -> np.ndarray:
        sl = self.structure.block_slice(i)
        return self.data[sl.start + 1 : sl.stop]

    def copy(self) -> "BlockVector":
        return BlockVector(self.data, self.structure, copy=True)

    def __len__(self):
        return self.data.size

    def __repr__(self):
        return f"BlockVector({self.data!r}, {self.structure!r})"


# --- flat-array kernels (shared with the inner iteration loops) ---


def block_sq_norms(data: np.ndarray, structure: ConeStructure) -> np.ndarray:
    """Per-block squared Euclidean norms."""
    return np.add.reduceat(data * data, structure.heads)


def _block_tail_norms(data: np.ndarray, structure: ConeStructure) -> np.ndarray:
    # summing squares with the head zeroed avoids the cancellation that
    # total_sq - head^2 suffers when the tail is tiny
    sq = data * data
    sq[structure.heads] = 0.0
    return np.sqrt(np.add.reduceat(sq, structure.heads))


def block_min_eigs(data: np.ndarray, structure: ConeStructure) -> np.ndarray:
    """Per-block minimum eigenvalue: x_i on half-lines, x_i0 - ||x_i1|| on cones."""
    return data[structure.heads] - _block_tail_norms(data, structure)


def block_max_eigs(data: np.ndarray, structure: ConeStructure) -> np.ndarray:
    return data[structure.heads] + _block_tail_norms(data, structure)


# --- spectral quantities ---


def lambda_min(x: BlockVector) -> float:
    return float(block_min_eigs(x.data, x.structure).min())


def lambda_max(x: BlockVector) -> float:
    return float(block_max_eigs(x.data, x.structure).max())


def det_block(x: BlockVector, i: int) -> float:
    b = x.block(i)
    if x.structure.kind(i) == HALFLINE:
        return float(b[0])
    return float(b[0] * b[0] - b[1:] @ b[1:])


def determinant(x: BlockVector) -> float:
    out = 1.0
    for i in range(x.structure.n):
        out *= det_block(x, i)
    return out


def identity(structure: ConeStructure) -> BlockVector:
    """The identity element e: 1 on half-lines, (1; 0, ..., 0) on cones."""
    data = np.zeros(structure.total_dim)
    data[structure.heads] = 1.0
    return BlockVector(data, structure, copy=False)


def is_member(x: BlockVector, tol: float) -> bool:
    """Membership in the cone up to slack tol >= 0."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return lambda_min(x) >= -tol

def is_interior(x: BlockVector, tol: float) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return lambda_min(x) > tol


def inf_norm(x: BlockVector) -> float:
    return float(np.abs(x.data).max())


def sample_interior(structure: ConeStructure, rng: np.random.Generator) -> BlockVector:
    """Sample a strictly interior point.

    On cone blocks the rotational part is uniform in the unit ball and the
    axis coordinate exceeds its norm by a uniform (0, 1] margin, so the
    minimum eigenvalue is strictly positive by construction.
    """
    data = np.zeros(structure.total_dim)
    for i, b in enumerate(structure.blocks):
        sl = structure.block_slice(i)
        margin = 1.0 - rng.uniform(0.0, 1.0)  # in (0, 1]
        if b.kind == HALFLINE:
            data[sl.start] = margin
        else:
            d = b.dim
            direction = rng.standard_normal(d - 1)
            nrm = np.linalg.norm(direction)
            if nrm > 0:
                radius = rng.uniform(0.0, 1.0) ** (1.0 / max(d - 1, 1))
                direction = direction / nrm * radius
            data[sl.start + 1 : sl.stop] = direction
            data[sl.start] = np.linalg.norm(direction) + margin
    return BlockVector(data, structure, copy=False)
