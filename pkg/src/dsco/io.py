"""Strict JSON file formats: per-node problem files, solver settings, and
result reports with input digests.

Every format carries an explicit `"schema": 1` version and rejects unknown
keys, so errors point at the offending field instead of surfacing later."""

import dataclasses
import hashlib
import json
import math
import re
from pathlib import Path

import numpy as np

from .driver import Settings
from .model import (Dataset, Hypergraph, LinearConstraints, NodeObjective,
                    ObjectiveKind, ProblemInstance, SparsityModel,
                    normalize_dataset, validate_instance)

SCHEMA_VERSION = 1

_FILE_RE = re.compile(r"^(?P<name>.+)_node(?P<rank>\d+)\.json$")


class SchemaViolation(ValueError):
    """Invalid document; `pointer` is a JSON pointer to the offending field."""

    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


class MissingRank(ValueError):
    def __init__(self, rank):
        self.rank = rank
        super().__init__(f"no problem file for rank {rank}")


class DimensionMismatch(ValueError):
    pass


def canonical_json(obj):
    """Stable, compact serialization: sorted keys, shortest float round-trip."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


# ---------------------------------------------------------------------------
# problem files

_PROBLEM_KEYS = {
    "schema": int,
    "name": str,
    "node_rank": int,
    "type": str,
    "X": list,
    "y": list,
    "lambda": (int, float),
    "kappa": int,
    "big_m": (int, float),   # optional
    "normalized": bool,
}
_PROBLEM_OPTIONAL = {"big_m"}

_TYPE_TO_KIND = {"classification": ObjectiveKind.LOGISTIC,
                 "regression": ObjectiveKind.LEAST_SQUARES}
_KIND_TO_TYPE = {v: k for k, v in _TYPE_TO_KIND.items()}


def _check_keys(doc, spec, optional, where=""):
    if not isinstance(doc, dict):
        raise SchemaViolation(where or "/", "expected a JSON object")
    for key in doc:
        if key not in spec:
            raise SchemaViolation(f"{where}/{key}", "unknown key")
    for key, typ in spec.items():
        if key in doc:
            if isinstance(doc[key], bool) and typ is not bool:
                raise SchemaViolation(f"{where}/{key}", "wrong type: expected number")
            if not isinstance(doc[key], typ):
                raise SchemaViolation(f"{where}/{key}",
                                      f"wrong type: expected {typ}")
        elif key not in optional:
            raise SchemaViolation(f"{where}/{key}", "missing required key")


def validate_problem_doc(doc):
    _check_keys(doc, _PROBLEM_KEYS, _PROBLEM_OPTIONAL)
    if doc["schema"] != SCHEMA_VERSION:
        raise SchemaViolation("/schema", f"unsupported version {doc['schema']}")
    if doc["type"] not in _TYPE_TO_KIND:
        raise SchemaViolation("/type", f"expected one of {sorted(_TYPE_TO_KIND)}")
    if doc["node_rank"] < 0:
        raise SchemaViolation("/node_rank", "must be >= 0")
    if doc["kappa"] < 1:
        raise SchemaViolation("/kappa", "must be >= 1")
    if doc["lambda"] < 0:
        raise SchemaViolation("/lambda", "must be >= 0")
    X = doc["X"]
    if not X or not all(isinstance(r, list) for r in X):
        raise SchemaViolation("/X", "expected a non-empty list of rows")
    width = len(X[0])
    for r, row in enumerate(X):
        if len(row) != width:
            raise SchemaViolation(f"/X/{r}", f"row length {len(row)} != {width}")
        for c, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaViolation(f"/X/{r}/{c}", "expected a number")
    if len(doc["y"]) != len(X):
        raise SchemaViolation("/y", f"length {len(doc['y'])} != number of rows {len(X)}")
    for i, v in enumerate(doc["y"]):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaViolation(f"/y/{i}", "expected a number")
    if "big_m" in doc and doc["big_m"] <= 0:
        raise SchemaViolation("/big_m", "must be positive")


def problem_doc(name, rank, obj, kappa, big_m=None, normalized=True):
    """Per-node problem document from a NodeObjective."""
    doc = {
        "schema": SCHEMA_VERSION,
        "name": name,
        "node_rank": int(rank),
        "type": _KIND_TO_TYPE[obj.kind],
        "X": [[float(v) for v in row] for row in obj.data.X],
        "y": [float(v) for v in obj.data.y],
        "lambda": float(obj.lam),
        "kappa": int(kappa),
        "normalized": bool(normalized),
    }
    if big_m is not None:
        doc["big_m"] = float(big_m)
    return doc


def problem_file_name(name, rank):
    return f"{name}_node{rank}.json"


def write_problem_files(inst, name, out_dir, normalized=True):
    """One file per node; returns the written paths in rank order."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    big_m = inst.sparsity.big_m
    paths = []
    for rank, obj in enumerate(inst.objectives):
        doc = problem_doc(name, rank, obj, inst.sparsity.kappa,
                          big_m=big_m[0] if big_m else None, normalized=normalized)
        path = out / problem_file_name(name, rank)
        path.write_text(canonical_json(doc) + "\n")
        paths.append(path)
    return paths


def _problem_paths(path):
    found = {}
    for p in sorted(Path(path).glob("*.json")):
        m = _FILE_RE.match(p.name)
        if m:
            found[int(m.group("rank"))] = p
    if not found:
        raise MissingRank(0)
    for r in range(max(found) + 1):
        if r not in found:
            raise MissingRank(r)
    return [found[r] for r in sorted(found)]


def parse_problem_dir(path, normalize=False):
    """Assemble a validated ProblemInstance from `<name>_node<rank>.json` files."""
    paths = _problem_paths(path)
    docs = []
    for p in paths:
        doc = json.loads(p.read_text())
        validate_problem_doc(doc)
        docs.append(doc)

    n = len(docs[0]["X"][0])
    kappa = docs[0]["kappa"]
    name = docs[0]["name"]
    big_ms = []
    objectives = []
    for rank, doc in enumerate(docs):
        if doc["node_rank"] != rank:
            raise SchemaViolation("/node_rank",
                                  f"rank {doc['node_rank']} does not match file order {rank}")
        if len(doc["X"][0]) != n:
            raise DimensionMismatch(f"node {rank} has {len(doc['X'][0])} features, node 0 has {n}")
        if doc["kappa"] != kappa:
            raise DimensionMismatch(f"node {rank} has kappa={doc['kappa']}, node 0 has {kappa}")
        if doc["name"] != name:
            raise DimensionMismatch(f"node {rank} has name={doc['name']!r}, node 0 has {name!r}")
        d = Dataset(np.array(doc["X"], dtype=np.float64),
                    np.array(doc["y"], dtype=np.float64))
        if normalize and not doc["normalized"]:
            d = normalize_dataset(d)
        objectives.append(NodeObjective(_TYPE_TO_KIND[doc["type"]], d, float(doc["lambda"])))
        if "big_m" in doc:
            big_ms.append(float(doc["big_m"]))

    big_m = [max(big_ms)] if big_ms else None
    N = len(docs)
    inst = ProblemInstance(
        objectives=objectives,
        hypergraph=Hypergraph(N, [list(range(N))]),
        sparsity=SparsityModel(kappa=kappa, big_m=big_m),
        linear=LinearConstraints.empty(n),
        n=n,
    )
    errors = validate_instance(inst)
    if errors:
        raise SchemaViolation("/", "; ".join(errors))
    return inst


def problem_digest(path):
    """sha-256 over the canonical JSON of all node files, in rank order."""
    h = hashlib.sha256()
    for p in _problem_paths(path):
        doc = json.loads(p.read_text())
        h.update(canonical_json(doc).encode())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# settings files

_SETTINGS_EXTRA = {"schema": int, "normalize": bool}


def settings_doc(settings, normalize=False):
    doc = {"schema": SCHEMA_VERSION, "normalize": bool(normalize)}
    doc.update(dataclasses.asdict(settings))
    return doc


def parse_settings(doc):
    """Strict parse; returns (Settings, normalize flag)."""
    fields = {f.name: f for f in dataclasses.fields(Settings)}
    spec = {name: ((int, float) if f.type in (float, "float") else
                   int if f.type in (int, "int") else str)
            for name, f in fields.items()}
    spec.update(_SETTINGS_EXTRA)
    optional = set(spec) - {"schema"}
    _check_keys(doc, spec, optional)
    if doc["schema"] != SCHEMA_VERSION:
        raise SchemaViolation("/schema", f"unsupported version {doc['schema']}")
    kwargs = {k: v for k, v in doc.items() if k in fields}
    try:
        settings = Settings(**kwargs)
    except ValueError as exc:
        raise SchemaViolation("/", str(exc))
    return settings, bool(doc.get("normalize", False))


def load_settings(path):
    return parse_settings(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# results files

def _json_float(v):
    # infinities appear when a run ends before finding an incumbent
    return float(v) if math.isfinite(v) else None


def results_doc(report, digest, settings=None):
    doc = {
        "schema": SCHEMA_VERSION,
        "problem_digest": digest,
        "status": report.status,
        "objective": _json_float(report.objective),
        "x": None if report.x is None else [float(v) for v in report.x],
        "support": list(report.support),
        "lb_trace": [_json_float(v) for v in report.lb_trace],
        "ub_trace": [_json_float(v) for v in report.ub_trace],
        "q_switch": report.q_switch,
        "iterations": report.iterations,
        "cut_counts": dict(report.cut_counts),
        "primal_solves": report.primal_solves,
        "phase_times": {k: float(v) for k, v in report.phase_times.items()},
        "master_rebuilds": report.master_rebuilds,
        "rebuilds_after_switch": report.rebuilds_after_switch,
        "bnb_nodes": report.bnb_nodes,
        "consensus_residual": float(report.consensus_residual),
        "warnings": list(report.warnings),
        "big_m": [float(v) for v in report.big_m],
    }
    if settings is not None:
        doc["settings"] = dataclasses.asdict(settings)
    return doc


def write_results(path, report, digest, settings=None):
    doc = results_doc(report, digest, settings)
    Path(path).write_text(canonical_json(doc) + "\n")
    return doc
