"""Client for the dsco solver CLI: build problems in memory, serialize them
to per-node JSON, and run solves in a subprocess."""

from .model import (ClientModel, ClientSettings, ClientValidationError,
                    canonical_json, create, problem_file_name)
from .runner import (SolveResult, SolverError, SolverNotFound, run,
                     EXIT_OK, EXIT_ERROR, EXIT_TIME_LIMIT)

__all__ = [
    "ClientModel", "ClientSettings", "ClientValidationError",
    "canonical_json", "create", "problem_file_name",
    "SolveResult", "SolverError", "SolverNotFound", "run",
    "EXIT_OK", "EXIT_ERROR", "EXIT_TIME_LIMIT",
]
