"""In-memory problem and settings builders.

ClientModel holds one node's data and validates it locally before any file
is written; create() serializes it to the `<name>_node<rank>.json` format
the solver CLI consumes.  No solving happens here: all numerics live in the
solver, this side only produces and parses JSON.
"""

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

PROBLEM_TYPES = ("classification", "regression")


class ClientValidationError(ValueError):
    """Invalid model; `pointers` lists the offending field paths."""

    def __init__(self, pointers):
        self.pointers = list(pointers)
        super().__init__("; ".join(self.pointers))


def canonical_json(obj):
    """Stable, compact serialization: sorted keys, shortest float round-trip."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def problem_file_name(name, rank):
    return f"{name}_node{rank}.json"


@dataclass
class ClientModel:
    """One node's share of a sparse regression/classification problem."""

    name: str
    problem_type: str
    X: np.ndarray
    y: np.ndarray
    kappa: int
    rank: int = 0
    lam: float = 0.1
    big_m: float | None = None
    normalize: bool = False   # center/unit-norm columns before writing

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)

    def validate(self):
        bad = []
        if not self.name or "/" in self.name:
            bad.append("/name: must be a non-empty string without '/'")
        if self.problem_type not in PROBLEM_TYPES:
            bad.append(f"/type: expected one of {list(PROBLEM_TYPES)}")
        if self.rank < 0:
            bad.append("/node_rank: must be >= 0")
        if self.X.ndim != 2 or self.X.size == 0:
            bad.append("/X: expected a non-empty 2-d array")
        else:
            if self.y.shape != (self.X.shape[0],):
                bad.append(f"/y: length {self.y.size} != number of rows {self.X.shape[0]}")
            if not (1 <= self.kappa <= self.X.shape[1]):
                bad.append(f"/kappa: must be in [1, {self.X.shape[1]}]")
        if self.lam < 0:
            bad.append("/lambda: must be >= 0")
        if self.big_m is not None and self.big_m <= 0:
            bad.append("/big_m: must be positive")
        if not np.all(np.isfinite(self.X)) or not np.all(np.isfinite(self.y)):
            bad.append("/X: all entries must be finite")
        if bad:
            raise ClientValidationError(bad)

    def _data(self):
        if not self.normalize:
            return self.X, self.y
        Xc = self.X - self.X.mean(axis=0)
        norms = np.linalg.norm(Xc, axis=0)
        if np.any(norms < 1e-12):
            raise ClientValidationError(
                ["/X: constant columns cannot be normalized"])
        return Xc / norms, self.y

    def to_doc(self):
        self.validate()
        X, y = self._data()
        doc = {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "node_rank": int(self.rank),
            "type": self.problem_type,
            "X": [[float(v) for v in row] for row in X],
            "y": [float(v) for v in y],
            "lambda": float(self.lam),
            "kappa": int(self.kappa),
            "normalized": bool(self.normalize),
        }
        if self.big_m is not None:
            doc["big_m"] = float(self.big_m)
        return doc


def create(model, out_dir):
    """Validate and write one node file; returns the written path."""
    doc = model.to_doc()   # raises before anything is written
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / problem_file_name(model.name, model.rank)
    path.write_text(canonical_json(doc) + "\n")
    return path


@dataclass
class ClientSettings:
    """Mirror of the solver's settings file; every field is optional there,
    so only the fields the caller touched need to survive a version skew."""

    algorithm: str = "dihoa"
    relative_gap: float = 1e-5
    absolute_gap: float = 1e-6
    switch_tol: float = 1e-3
    switch_mode: str = "relative"
    time_limit: float = 100.0
    max_oa_iters: int = 100
    cut_policy: str = "per-phase"
    sparsity_mode: str = "both"
    verbosity: int = 0
    rho: float = 1.0
    alpha: float = 1.6
    eps_primal: float = 1e-6
    eps_dual: float = 1e-6
    max_admm_iters: int = 5000
    node_limit: int = 1_000_000
    multi_tree_node_limit: int = 200
    normalize: bool = False

    def validate(self):
        bad = []
        if self.algorithm not in ("dihoa", "dipoa"):
            bad.append(f"/algorithm: unknown algorithm {self.algorithm!r}")
        if self.relative_gap <= 0 or self.absolute_gap <= 0:
            bad.append("/relative_gap: gaps must be positive")
        if self.time_limit <= 0:
            bad.append("/time_limit: must be positive")
        if bad:
            raise ClientValidationError(bad)

    def to_doc(self):
        self.validate()
        doc = {"schema": SCHEMA_VERSION}
        doc.update(dataclasses.asdict(self))
        return doc

    def write(self, path):
        Path(path).write_text(canonical_json(self.to_doc()) + "\n")
        return Path(path)
