"""Projection-and-rescaling feasibility solver for second-order cone systems."""

from .cones import (
    Block,
    BlockVector,
    ConeStructure,
    determinant,
    halfline,
    identity,
    inf_norm,
    is_interior,
    is_member,
    lambda_max,
    lambda_min,
    soc,
)
from .exceptions import SocRescaleError
from .instances import Certificate, Instance, read_instance, verify_certificate, write_instance
from .socp import PhaseResult, StandardSocp, solve_to_gap
from .solver import SolveResult, SolverOptions, solve

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockVector",
    "Certificate",
    "ConeStructure",
    "Instance",
    "PhaseResult",
    "SocRescaleError",
    "SolveResult",
    "SolverOptions",
    "StandardSocp",
    "determinant",
    "halfline",
    "identity",
    "inf_norm",
    "is_interior",
    "is_member",
    "lambda_max",
    "lambda_min",
    "read_instance",
    "soc",
    "solve",
    "solve_to_gap",
    "verify_certificate",
    "write_instance",
]
