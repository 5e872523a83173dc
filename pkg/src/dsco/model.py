"""Problem model: domain types, validation, dataset generation, big-M estimation."""

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


class DegenerateColumn(ValueError):
    """A centered column has (near-)zero norm and cannot be scaled."""


class ObjectiveKind(str, Enum):
    LOGISTIC = "logistic"
    LEAST_SQUARES = "least_squares"


class SparsityMode(str, Enum):
    BIG_M = "bigm"
    SOS1 = "sos1"
    BOTH = "both"


@dataclass
class Dataset:
    X: np.ndarray  # (p, n)
    y: np.ndarray  # (p,)

    @property
    def p(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.X.shape[1]


@dataclass
class NodeObjective:
    kind: ObjectiveKind
    data: Dataset
    lam: float  # ridge weight


@dataclass
class Hypergraph:
    num_nodes: int
    edges: list  # list of lists of node indices

    @property
    def num_edges(self):
        return len(self.edges)

    def edge_of_node(self, i):
        """Index of the first edge containing node i (its representative LFC)."""
        for j, e in enumerate(self.edges):
            if i in e:
                return j
        raise ValueError(f"node {i} is not in any edge")


@dataclass
class SparsityModel:
    kappa: int
    big_m: list | None = None  # per-edge M_j; None until estimated
    mode: SparsityMode = SparsityMode.BOTH
    estimated: bool = False


@dataclass
class LinearConstraints:
    A: np.ndarray  # (m, n), possibly m = 0
    b: np.ndarray  # (m,)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((0, n)), np.zeros(0))

    @property
    def m(self):
        return self.A.shape[0]


@dataclass
class ProblemInstance:
    objectives: list  # one NodeObjective per node
    hypergraph: Hypergraph
    sparsity: SparsityModel
    linear: LinearConstraints
    n: int

    @property
    def num_nodes(self):
        return len(self.objectives)


def _hypergraph_connected(hg):
    """Connectivity via shared-node paths between hyperedges."""
    if hg.num_edges == 0:
        return hg.num_nodes == 0
    reached_nodes = set(hg.edges[0])
    used = {0}
    changed = True
    while changed:
        changed = False
        for j, e in enumerate(hg.edges):
            if j in used:
                continue
            if reached_nodes & set(e):
                reached_nodes |= set(e)
                used.add(j)
                changed = True
    return reached_nodes == set(range(hg.num_nodes))


def validate_instance(inst):
    """Return a list of invariant violations (empty list means the instance is ok)."""
    errors = []
    n = inst.n
    N = inst.num_nodes
    hg = inst.hypergraph

    if N < 1:
        errors.append("objectives: at least one node required")
    if hg.num_nodes != N:
        errors.append(f"hypergraph.num_nodes: {hg.num_nodes} != number of objectives {N}")

    for i, obj in enumerate(inst.objectives):
        d = obj.data
        if d.X.ndim != 2 or d.X.shape[1] != n:
            errors.append(f"objectives[{i}].data.X: expected shape (p, {n})")
            continue
        if d.X.shape[0] < 1:
            errors.append(f"objectives[{i}].data.X: p must be >= 1")
        if d.y.shape != (d.X.shape[0],):
            errors.append(f"objectives[{i}].data.y: length {d.y.shape} != p {d.X.shape[0]}")
        if not np.all(np.isfinite(d.X)) or not np.all(np.isfinite(d.y)):
            errors.append(f"objectives[{i}].data: NaN/Inf entries")
        if obj.kind == ObjectiveKind.LOGISTIC and d.y.size and not np.all(np.isin(d.y, (-1.0, 1.0))):
            errors.append(f"objectives[{i}].data.y: classification responses must be in {{-1,+1}}")
        if obj.lam < 0:
            errors.append(f"objectives[{i}].lambda: must be >= 0")

    covered = set()
    for j, e in enumerate(hg.edges):
        for i in e:
            if not (0 <= i < N):
                errors.append(f"hypergraph.edges[{j}]: node index {i} out of [0, {N})")
        covered |= set(e)
    missing = set(range(N)) - covered
    if missing:
        errors.append(f"hypergraph: nodes {sorted(missing)} appear in no edge")
    if not _hypergraph_connected(hg):
        errors.append("hypergraph not connected")

    sp = inst.sparsity
    if not (1 <= sp.kappa <= n):
        errors.append("kappa out of range")
    if sp.big_m is not None:
        if len(sp.big_m) != hg.num_edges:
            errors.append("big_m: one value per edge required")
        elif any(m <= 0 for m in sp.big_m):
            errors.append("big_m: values must be positive")

    lc = inst.linear
    if lc.m > 0 and lc.A.shape[1] != n:
        errors.append(f"linear.A: expected {n} columns")
    if lc.b.shape != (lc.m,):
        errors.append("linear.b: length must match rows of A")

    return errors


def normalize_dataset(d):
    """Center each column of X to mean 0, then scale to unit l2 norm.  y unchanged."""
    if d.p < 2:
        raise ValueError("normalization requires p >= 2")
    Xc = d.X - d.X.mean(axis=0)
    norms = np.linalg.norm(Xc, axis=0)
    bad = np.where(norms < 1e-12)[0]
    if bad.size:
        raise DegenerateColumn(f"columns {bad.tolist()} are constant (zero norm after centering)")
    return Dataset(Xc / norms, d.y.copy())


def _planted_instance(kind, n, p, N, kappa, lam, noise_sd, seed):
    rng = np.random.default_rng(seed)
    support = rng.choice(n, size=kappa, replace=False)
    theta = np.zeros(n)
    # well-separated planted coefficients, random signs
    theta[support] = rng.choice((-1.0, 1.0), size=kappa) * rng.uniform(1.0, 2.0, size=kappa)

    objectives = []
    for _ in range(N):
        X = rng.standard_normal((p, n))
        z = X @ theta
        if kind == ObjectiveKind.LOGISTIC:
            prob = 1.0 / (1.0 + np.exp(-z))
            y = np.where(rng.random(p) < prob, 1.0, -1.0)
        else:
            y = z + noise_sd * rng.standard_normal(p)
        d = normalize_dataset(Dataset(X, y))
        objectives.append(NodeObjective(kind, d, lam))

    hg = Hypergraph(N, [list(range(N))])
    inst = ProblemInstance(
        objectives=objectives,
        hypergraph=hg,
        sparsity=SparsityModel(kappa=kappa),
        linear=LinearConstraints.empty(n),
        n=n,
    )
    return inst


def generate_dslogr(n, p, N, kappa, lam, seed):
    """Random distributed sparse logistic regression instance (one LFC, K = 1)."""
    if min(n, p, N, kappa) < 1 or kappa > n:
        raise ValueError("arguments must be positive with kappa <= n")
    return _planted_instance(ObjectiveKind.LOGISTIC, n, p, N, kappa, lam, 0.0, seed)


def generate_dslinr(n, p, N, kappa, lam, noise_sd, seed):
    """Random distributed sparse linear regression instance (one LFC, K = 1)."""
    if min(n, p, N, kappa) < 1 or kappa > n:
        raise ValueError("arguments must be positive with kappa <= n")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    return _planted_instance(ObjectiveKind.LEAST_SQUARES, n, p, N, kappa, lam, noise_sd, seed)


def estimate_big_m(inst):
    """Per-edge M_j = max(1, 2 * ||x_hat||_inf) from the dense centralized ridge solve."""
    from .engine import solve_restricted_centralized

    x_hat, _ = solve_restricted_centralized(inst, range(inst.n))
    m = max(1.0, 2.0 * float(np.max(np.abs(x_hat))))
    return [m] * inst.hypergraph.num_edges


def with_big_m(inst, values=None):
    """Copy of inst with big-M values attached (estimating them when absent)."""
    if values is None:
        values = estimate_big_m(inst)
        estimated = True
    else:
        estimated = False
    sp = replace(inst.sparsity, big_m=list(values), estimated=estimated)
    return replace(inst, sparsity=sp)
