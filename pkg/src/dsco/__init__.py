"""Distributed sparse convex optimization solver.

Cardinality-constrained regression and classification over node-partitioned
data, solved by outer approximation with an internal LP-based branch and
bound and distributed ADMM primal solves.
"""

from .driver import Settings, SolveReport, run_dihoa, run_dipoa, solve
from .engine import brute_force_oracle
from .model import (
    ObjectiveKind,
    ProblemInstance,
    SparsityMode,
    generate_dslinr,
    generate_dslogr,
)
from .transport import InprocCluster, TcpHub, TcpWorld

__version__ = "0.1.0"

__all__ = [
    "Settings",
    "SolveReport",
    "run_dihoa",
    "run_dipoa",
    "solve",
    "brute_force_oracle",
    "ObjectiveKind",
    "ProblemInstance",
    "SparsityMode",
    "generate_dslinr",
    "generate_dslogr",
    "InprocCluster",
    "TcpHub",
    "TcpWorld",
    "__version__",
]
