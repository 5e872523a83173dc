"""First- and second-order outer approximations and their storage."""

from dataclasses import dataclass

import numpy as np

DEDUP_TOL = 1e-7


class InvalidM(ValueError):
    pass


@dataclass
class LinearCut:
    """gamma_node >= f0 + g^T (x - x0); underestimates f by convexity."""
    node: int
    x0: np.ndarray
    f0: float
    g: np.ndarray

    kind = "linear"

    def value(self, x):
        return self.f0 + float(self.g @ (x - self.x0))

    def to_json(self):
        return {"kind": self.kind, "node": self.node, "point": self.x0.tolist(),
                "value": self.f0, "gradient": self.g.tolist()}


@dataclass
class QuadraticCut:
    """Linear cut plus (m/2)||x - x0||^2; valid when hessian(f) >= m*I."""
    node: int
    x0: np.ndarray
    f0: float
    g: np.ndarray
    m: float

    kind = "quadratic"

    def value(self, x):
        d = x - self.x0
        return self.f0 + float(self.g @ d) + 0.5 * self.m * float(d @ d)

    def linearize_at(self, x):
        """Tangent of the quadratic underestimator at x: a valid linear cut."""
        d = x - self.x0
        return LinearCut(self.node, x.copy(), self.value(x), self.g + self.m * d)

    def to_json(self):
        return {"kind": self.kind, "node": self.node, "point": self.x0.tolist(),
                "value": self.f0, "gradient": self.g.tolist(), "m": self.m}


def gen_first_order_cut(oracle, x0, node=0):
    x0 = np.asarray(x0, dtype=np.float64)
    f0, g = oracle.value_grad(x0)
    return LinearCut(node, x0.copy(), float(f0), g)


def gen_second_order_cut(oracle, x0, m, node=0):
    if m <= 0:
        raise InvalidM(f"strong convexity constant must be positive, got {m}")
    x0 = np.asarray(x0, dtype=np.float64)
    f0, g = oracle.value_grad(x0)
    return QuadraticCut(node, x0.copy(), float(f0), g, float(m))


class CutStorage:
    """Append-only per-node cut lists with point-based deduplication."""

    ADDED = "added"
    DUPLICATE = "duplicate"

    def __init__(self, dedup_tol=DEDUP_TOL):
        self.dedup_tol = dedup_tol
        self._by_node = {}

    def add(self, cut):
        cuts = self._by_node.setdefault(cut.node, [])
        for existing in cuts:
            if np.max(np.abs(existing.x0 - cut.x0)) < self.dedup_tol:
                return self.DUPLICATE
        cuts.append(cut)
        return self.ADDED

    def cuts_for(self, node):
        return list(self._by_node.get(node, []))

    def all_cuts(self):
        return [c for cuts in self._by_node.values() for c in cuts]

    def count(self, kind=None):
        cuts = self.all_cuts()
        if kind is None:
            return len(cuts)
        return sum(1 for c in cuts if c.kind == kind)

    def to_json(self):
        return [c.to_json() for c in self.all_cuts()]
