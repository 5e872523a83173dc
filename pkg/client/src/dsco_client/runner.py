"""Subprocess driver: writes the problem directory and invokes `dsco run`.

Exit codes map to typed outcomes: 0 and 2 both produce a SolveResult (2 means
the time limit was hit; the solver still reports its best incumbent), 1
raises SolverError with the CLI's stderr, and a missing executable raises
SolverNotFound.
"""

import json
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .model import ClientSettings, create

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TIME_LIMIT = 2


class SolverError(RuntimeError):
    """The solver CLI failed (exit code 1); `stderr` holds its message."""

    def __init__(self, stderr, exit_code=EXIT_ERROR):
        self.stderr = stderr
        self.exit_code = exit_code
        super().__init__(stderr.strip() or f"solver exited with code {exit_code}")


class SolverNotFound(EnvironmentError):
    pass


@dataclass
class SolveResult:
    status: str            # optimal | time_limit | ...
    objective: float | None
    x: list | None
    support: tuple
    exit_code: int
    doc: dict              # full parsed results file

    @property
    def optimal(self):
        return self.status == "optimal"

    @property
    def time_limit(self):
        return self.status == "time_limit"


def _result_from_doc(doc, exit_code):
    return SolveResult(status=doc["status"], objective=doc["objective"],
                       x=doc["x"], support=tuple(doc["support"]),
                       exit_code=exit_code, doc=doc)


def run(models, settings=None, workdir=None, solver="dsco", backend="inproc",
        port_base=0, timeout=None):
    """Write one file per model plus settings, then solve via the CLI.

    `models` is one ClientModel per rank (rank fields must be 0..N-1 after
    sorting).  Returns a SolveResult; raises SolverError / SolverNotFound.
    """
    settings = settings or ClientSettings()
    models = sorted(models, key=lambda m: m.rank)
    if [m.rank for m in models] != list(range(len(models))):
        raise ValueError("model ranks must be exactly 0..N-1")

    with tempfile.TemporaryDirectory() as tmp:
        problem_dir = Path(workdir) if workdir else Path(tmp) / "problem"
        problem_dir.mkdir(parents=True, exist_ok=True)
        for m in models:
            create(m, problem_dir)
        settings_path = settings.write(problem_dir / "settings.json")
        results_path = Path(tmp) / "results.json"

        cmd = [solver, "run", "--problem-dir", str(problem_dir),
               "--settings", str(settings_path), "--backend", backend,
               "--out", str(results_path)]
        if backend == "tcp":
            cmd += ["--port-base", str(port_base)]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True,
                                  timeout=timeout)
        except FileNotFoundError:
            raise SolverNotFound(
                f"solver executable {solver!r} not found on PATH; install the "
                "dsco package or pass solver=<path>") from None

        if proc.returncode in (EXIT_OK, EXIT_TIME_LIMIT) and results_path.exists():
            doc = json.loads(results_path.read_text())
            return _result_from_doc(doc, proc.returncode)
        raise SolverError(proc.stderr, proc.returncode)
