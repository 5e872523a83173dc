"""Master mixed-integer machinery: the cut-based relaxation LP, Kelley
treatment of quadratic cuts, and branch-and-bound (full-tree and lazy-cut
single-tree variants) with big-M and SOS-1 sparsity handling."""

import heapq
import itertools
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .cuts import QuadraticCut
from .model import SparsityMode
from .simplex import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL,
                      IncrementalDualLp, solve_lp)


class KelleyStall(RuntimeError):
    pass


INT_TOL = 1e-6
Y_ZERO_TOL = 1e-7
QUAD_VIOL_TOL = 1e-7
PRUNE_TOL = 1e-9


@dataclass
class BnbConfig:
    abs_tol: float = PRUNE_TOL        # pruning slack
    gap_tol: float = 0.0              # stop when ub - lb <= gap_tol (single tree)
    rel_gap: float = 0.0              # or when (ub - lb) <= rel_gap * |ub|
    node_limit: int = 1_000_000
    max_resolves: int = 50
    kelley_rounds: int = 1000         # per-node linearization budget
    deadline: float | None = None     # absolute time.monotonic() deadline
    log: object = None                # callable(str) for per-node lines


@dataclass
class BnbNode:
    node_id: int
    depth: int
    lb: float
    delta_fix: dict = field(default_factory=dict)   # delta col -> 0.0 | 1.0
    y_zero: frozenset = frozenset()                 # y cols forced to 0 (SOS-1 branch)

    def child(self, node_id, lb, delta_fix=None, y_zero=None):
        fix = dict(self.delta_fix)
        if delta_fix:
            fix.update(delta_fix)
        yz = self.y_zero if y_zero is None else self.y_zero | frozenset(y_zero)
        return BnbNode(node_id, self.depth + 1, lb, fix, yz)


@dataclass
class NodeSolution:
    status: str
    objective: float = np.inf
    y: np.ndarray | None = None       # (K, n)
    gamma: np.ndarray | None = None   # (N,)
    delta: np.ndarray | None = None   # (K, n) LP values


@dataclass
class Incumbent:
    delta: np.ndarray    # (K, n) integral
    y: np.ndarray        # (K, n)
    objective: float     # master objective for bnb_solve; verified for single tree
    x: np.ndarray | None = None


class MasterModel:
    """Cut-based relaxation of the sparse consensus problem.

    Variables: y_jk (per edge), gamma_i (per node), delta_jk (per edge).
    x_i is eliminated through the consensus equality x_i = y_{j(i)}.
    """

    def __init__(self, inst, tangent_pool=128):
        self.inst = inst
        hg = inst.hypergraph
        self.K, self.n, self.N = hg.num_edges, inst.n, inst.num_nodes
        self.mode = inst.sparsity.mode
        self.kappa = inst.sparsity.kappa
        if inst.sparsity.big_m is None:
            raise ValueError("big-M values required to build the master model")
        self.big_m = list(inst.sparsity.big_m)
        self.rep_edge = [hg.edge_of_node(i) for i in range(self.N)]

        self.nvars = self.K * self.n + self.N + self.K * self.n
        self._rows_ub = []    # permanent (coef vector, rhs) rows
        self._rows_eq = []
        # Kelley tangents are refinements, not facts: old ones may be evicted
        # without affecting validity, which keeps the LP size bounded
        self._tangents = []
        self._tangent_cap = tangent_pool
        self.quad_cuts = []
        self.linear_cut_rows = 0
        self._ilp = None            # warm incremental LP (rebuilt on eviction)
        self._ilp_pending = []      # rows added since the last sync
        self._build_base()

    # variable indexing
    def y_col(self, j, k):
        return j * self.n + k

    def gamma_col(self, i):
        return self.K * self.n + i

    def delta_col(self, j, k):
        return self.K * self.n + self.N + j * self.n + k

    def _build_base(self):
        K, n, N = self.K, self.n, self.N
        lb = np.full(self.nvars, -np.inf)
        ub = np.full(self.nvars, np.inf)
        # both loss kinds are nonnegative, so the epigraph variables are too;
        # the resulting nonnegative cost lets the LP start from the all-slack
        # basis with the dual simplex (no phase 1 on every cut round)
        for i in range(N):
            lb[self.gamma_col(i)] = 0.0
        for j in range(K):
            for k in range(n):
                lb[self.y_col(j, k)] = -self.big_m[j]
                ub[self.y_col(j, k)] = self.big_m[j]
                lb[self.delta_col(j, k)] = 0.0
                ub[self.delta_col(j, k)] = 1.0
        self.base_lb, self.base_ub = lb, ub

        if self.mode in (SparsityMode.BIG_M, SparsityMode.BOTH):
            for j in range(K):
                for k in range(n):
                    row = np.zeros(self.nvars)
                    row[self.y_col(j, k)] = 1.0
                    row[self.delta_col(j, k)] = -self.big_m[j]
                    self._rows_ub.append((row, 0.0))
                    row = np.zeros(self.nvars)
                    row[self.y_col(j, k)] = -1.0
                    row[self.delta_col(j, k)] = -self.big_m[j]
                    self._rows_ub.append((row, 0.0))
        for j in range(K):
            row = np.zeros(self.nvars)
            for k in range(n):
                row[self.delta_col(j, k)] = 1.0
            self._rows_ub.append((row, float(self.kappa)))

        # optional shared linear constraints A y_j <= b, per edge
        lc = self.inst.linear
        for j in range(K):
            for r in range(lc.m):
                row = np.zeros(self.nvars)
                row[self.y_col(j, 0):self.y_col(j, 0) + n] = lc.A[r]
                self._rows_ub.append((row, float(lc.b[r])))

        # edges sharing a node carry the same consensus variable
        if K > 1:
            hg = self.inst.hypergraph
            linked = {0}
            for j, jp in itertools.combinations(range(K), 2):
                if set(hg.edges[j]) & set(hg.edges[jp]) and not (j in linked and jp in linked):
                    for k in range(n):
                        row = np.zeros(self.nvars)
                        row[self.y_col(j, k)] = 1.0
                        row[self.y_col(jp, k)] = -1.0
                        self._rows_eq.append((row, 0.0))
                    linked |= {j, jp}

        c = np.zeros(self.nvars)
        for i in range(N):
            c[self.gamma_col(i)] = 1.0
        self.c = c

    def add_cut(self, cut):
        """Install a cut as LP rows (quadratic cuts also register for Kelley)."""
        if isinstance(cut, QuadraticCut):
            self.quad_cuts.append(cut)
            row = self._linear_row(cut.linearize_at(cut.x0))
        else:
            row = self._linear_row(cut)
            self.linear_cut_rows += 1
        self._rows_ub.append(row)
        self._ilp_pending.append(row)

    def _linear_row(self, lin):
        # g . y_{j(i)} - gamma_i <= g . x0 - f0
        j = self.rep_edge[lin.node]
        row = np.zeros(self.nvars)
        row[self.y_col(j, 0):self.y_col(j, 0) + self.n] = lin.g
        row[self.gamma_col(lin.node)] = -1.0
        rhs = float(lin.g @ lin.x0 - lin.f0)
        return row, rhs

    def add_tangent(self, lin):
        row = self._linear_row(lin)
        self._tangents.append(row)
        self._ilp_pending.append(row)
        if len(self._tangents) > self._tangent_cap:
            # evict the oldest half in one batch so the warm LP survives long
            # stretches of appends between rebuilds
            del self._tangents[:self._tangent_cap // 2]
            self._ilp = None
            self._ilp_pending.clear()

    def bounds_for(self, node):
        lb, ub = self.base_lb.copy(), self.base_ub.copy()
        for col, val in node.delta_fix.items():
            lb[col] = ub[col] = val
        for col in node.y_zero:
            lb[col] = ub[col] = 0.0
        return lb, ub

    def _lp_arrays(self):
        rows = self._rows_ub + list(self._tangents)
        A_ub = np.array([r for r, _ in rows])
        b_ub = np.array([v for _, v in rows])
        if self._rows_eq:
            A_eq = np.array([r for r, _ in self._rows_eq])
            b_eq = np.array([v for _, v in self._rows_eq])
        else:
            A_eq = b_eq = None
        return A_ub, b_ub, A_eq, b_eq

    def solve_lp(self, lb=None, ub=None):
        lb = self.base_lb if lb is None else lb
        ub = self.base_ub if ub is None else ub
        if self._rows_eq:
            A_ub, b_ub, A_eq, b_eq = self._lp_arrays()
            return solve_lp(self.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                            lb=lb, ub=ub)
        if self._ilp is None:
            self._ilp = IncrementalDualLp(self.c, self.base_lb, self.base_ub)
            rows = self._rows_ub + self._tangents
            if rows:
                self._ilp.add_rows(np.array([r for r, _ in rows]),
                                   np.array([v for _, v in rows]))
            self._ilp_pending.clear()
        elif self._ilp_pending:
            self._ilp.add_rows(np.array([r for r, _ in self._ilp_pending]),
                               np.array([v for _, v in self._ilp_pending]))
            self._ilp_pending.clear()
        self._ilp.set_bounds(lb, ub)
        sol = self._ilp.solve()
        if sol.status == ITERATION_LIMIT:
            # numerical trouble on the warm path: one-shot solve, cold restart
            self._ilp = None
            A_ub, b_ub, A_eq, b_eq = self._lp_arrays()
            return solve_lp(self.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                            lb=lb, ub=ub)
        return sol

    def split(self, x):
        y = x[:self.K * self.n].reshape(self.K, self.n)
        gamma = x[self.K * self.n:self.K * self.n + self.N]
        delta = x[self.K * self.n + self.N:].reshape(self.K, self.n)
        return y, gamma, delta

    def quad_violation(self, y, gamma):
        """Largest violation of a stored quadratic cut at (y, gamma)."""
        worst, worst_cut = 0.0, None
        for cut in self.quad_cuts:
            j = self.rep_edge[cut.node]
            v = cut.value(y[j]) - gamma[cut.node]
            if v > worst:
                worst, worst_cut = v, cut
        return worst, worst_cut


def solve_node_relaxation(model, node, max_rounds=1000, prune_at=np.inf):
    """LP over the linear rows, tightened by Kelley linearizations of every
    quadratic cut violated at the LP point.

    Runs until every stored cut holds to QUAD_VIOL_TOL at the LP point, or
    until the LP objective stagnates, or until the objective reaches
    prune_at (the caller will prune the node, so refining further is
    wasted work).  The returned objective is a valid lower bound either
    way, because every tangent row is itself a valid relaxation of its
    quadratic cut."""
    lb, ub = model.bounds_for(node)
    window = deque(maxlen=6)
    for _ in range(max_rounds):
        sol = model.solve_lp(lb, ub)
        if sol.status == INFEASIBLE:
            return NodeSolution(INFEASIBLE)
        if sol.status != OPTIMAL:
            return NodeSolution(sol.status)
        y, gamma, delta = model.split(sol.x)
        out = NodeSolution(OPTIMAL, float(sol.objective), y, gamma, delta)
        if out.objective >= prune_at:
            return out
        worst = 0.0
        for cut in model.quad_cuts:
            pt = y[model.rep_edge[cut.node]]
            v = cut.value(pt) - gamma[cut.node]
            worst = max(worst, v)
            if v > QUAD_VIOL_TOL:
                model.add_tangent(cut.linearize_at(pt))
        if worst <= QUAD_VIOL_TOL:
            return out
        obj = float(sol.objective)
        if len(window) == window.maxlen and \
                obj <= window[0] + 1e-8 * (1.0 + abs(obj)):
            return out
        window.append(obj)
    raise KelleyStall(f"Kelley loop did not converge in {max_rounds} rounds")


def _integral_feasible(model, node, sol):
    """Integrality test plus the branch to take when it fails."""
    K, n = model.K, model.n
    if model.mode in (SparsityMode.BIG_M, SparsityMode.BOTH):
        frac = np.abs(sol.delta - np.round(sol.delta))
        worst = float(frac.max()) if frac.size else 0.0
        if worst <= INT_TOL:
            return True, None
        # most fractional, ties by lowest (j, k)
        pick = int(np.argmax(np.round(frac, 9).ravel()))
        j, k = divmod(pick, n)
        return False, ("delta", j, k)
    for j in range(K):
        fixed_one = {k for k in range(n)
                     if node.delta_fix.get(model.delta_col(j, k)) == 1.0}
        support = {k for k in range(n) if abs(sol.y[j][k]) > Y_ZERO_TOL}
        if len(support | fixed_one) > model.kappa:
            cand = [(abs(sol.y[j][k]), -k) for k in sorted(support - fixed_one)]
            if not cand:
                continue
            _, negk = max(cand)
            return False, ("sos1", j, -negk)
    return True, None


def extract_delta(model, node, sol):
    """Integral delta (K, n) from an integral-feasible node solution."""
    K, n = model.K, model.n
    if model.mode in (SparsityMode.BIG_M, SparsityMode.BOTH):
        return np.round(sol.delta)
    delta = np.zeros((K, n))
    for j in range(K):
        for k in range(n):
            if node.delta_fix.get(model.delta_col(j, k)) == 1.0 or \
                    abs(sol.y[j][k]) > Y_ZERO_TOL:
                delta[j, k] = 1.0
    return delta


def _branch(model, node, sol, spec, next_id):
    kind, j, k = spec
    # the inherited bound stays valid for subregions, so children never regress
    lb = max(node.lb, float(sol.objective))
    if kind == "delta":
        col = model.delta_col(j, k)
        return [node.child(next_id(), lb, delta_fix={col: 0.0}),
                node.child(next_id(), lb, delta_fix={col: 1.0})]
    # SOS-1 pair: (y_jk = 0) vs (delta_jk = 1)
    return [node.child(next_id(), lb, y_zero=[model.y_col(j, k)]),
            node.child(next_id(), lb, delta_fix={model.delta_col(j, k): 1.0})]


@dataclass
class BnbStats:
    nodes: int = 0
    lp_solves: int = 0
    status: str = "optimal"


class _Search:
    def __init__(self, model, cfg):
        self.model = model
        self.cfg = cfg
        self.heap = []
        self.counter = itertools.count()
        self.ids = itertools.count()
        self.stats = BnbStats()

    def next_id(self):
        return next(self.ids)

    def push(self, node):
        heapq.heappush(self.heap, (node.lb, next(self.counter), node))

    def pop(self):
        _, _, node = heapq.heappop(self.heap)
        return node

    def open_lb(self):
        return self.heap[0][0] if self.heap else np.inf

    def out_of_time(self):
        return self.cfg.deadline is not None and time.monotonic() > self.cfg.deadline

    def log(self, node, status, lb):
        if self.cfg.log is not None:
            self.cfg.log(f"node={node.node_id} depth={node.depth} lb={lb:.9g} {status}")


def bnb_solve(model, cfg=None):
    """Full-tree best-first branch-and-bound on the current master model.

    Returns (Incumbent | None, lb, BnbStats).  The incumbent objective is the
    master (surrogate) optimum, which is the dual lower bound lb^q.
    """
    cfg = cfg or BnbConfig()
    s = _Search(model, cfg)
    root = BnbNode(s.next_id(), 0, -np.inf)
    s.push(root)
    incumbent = None
    ub = np.inf
    last_frac = None

    while s.heap:
        if s.stats.nodes >= cfg.node_limit:
            s.stats.status = "node_limit"
            break
        if s.out_of_time():
            s.stats.status = "time_limit"
            break
        node = s.pop()
        if node.lb >= ub - cfg.abs_tol:
            s.log(node, "pruned", node.lb)
            continue
        s.stats.nodes += 1
        sol = solve_node_relaxation(model, node, max_rounds=cfg.kelley_rounds,
                                    prune_at=ub - cfg.abs_tol)
        s.stats.lp_solves += 1
        if sol.status == INFEASIBLE:
            s.log(node, sol.status, node.lb)
            continue
        if sol.status != OPTIMAL:
            raise RuntimeError(f"node relaxation failed with status {sol.status}")
        if sol.objective >= ub - cfg.abs_tol:
            s.log(node, "pruned", sol.objective)
            continue
        ok, spec = _integral_feasible(model, node, sol)
        if ok:
            ub = sol.objective
            incumbent = Incumbent(extract_delta(model, node, sol), sol.y.copy(),
                                  float(sol.objective))
            s.log(node, "integral", sol.objective)
            continue
        for child in _branch(model, node, sol, spec, s.next_id):
            s.push(child)
        s.log(node, "branched", sol.objective)
        last_frac = sol

    if incumbent is None and s.stats.status == "node_limit" and last_frac is not None:
        # budget ran out before any integral node: round the last fractional
        # point to its kappa largest coordinates so the caller still gets a
        # feasible support to evaluate (objective inf keeps it out of pruning)
        delta = np.zeros((model.K, model.n))
        for j in range(model.K):
            top = np.argsort(-np.abs(last_frac.y[j]))[:model.kappa]
            delta[j, top] = 1.0
        incumbent = Incumbent(delta, last_frac.y.copy(), np.inf)

    lb = min(ub, s.open_lb())
    return incumbent, float(lb), s.stats


def bnb_single_tree(model, callback, cfg=None, initial_ub=np.inf, trace=None):
    """Single persistent tree with lazy cuts.

    callback(delta, y) is invoked at every new integral point; it must solve
    the primal, install the resulting cuts into `model`, and return the
    verified upper bound and incumbent point (true_obj, x).  A node is final
    only when its relaxation is integral and violates no stored cut.

    Returns (Incumbent | None, lb, BnbStats).
    """
    cfg = cfg or BnbConfig()
    s = _Search(model, cfg)
    s.push(BnbNode(s.next_id(), 0, -np.inf))
    incumbent = None
    ub = float(initial_ub)
    evaluated = {}

    while s.heap:
        if s.stats.nodes >= cfg.node_limit:
            s.stats.status = "node_limit"
            break
        if s.out_of_time():
            s.stats.status = "time_limit"
            break
        if ub - s.open_lb() <= max(cfg.gap_tol, cfg.rel_gap * abs(ub)):
            break
        node = s.pop()
        if node.lb >= ub - cfg.abs_tol:
            s.log(node, "pruned", node.lb)
            continue
        s.stats.nodes += 1

        closed = False
        for _ in range(cfg.max_resolves):
            sol = solve_node_relaxation(model, node, max_rounds=cfg.kelley_rounds,
                                        prune_at=ub - cfg.abs_tol)
            s.stats.lp_solves += 1
            if sol.status == INFEASIBLE:
                s.log(node, sol.status, node.lb)
                closed = True
                break
            if sol.status != OPTIMAL:
                raise RuntimeError(f"node relaxation failed with status {sol.status}")
            if sol.objective >= ub - cfg.abs_tol:
                s.log(node, "pruned", sol.objective)
                closed = True
                break
            ok, spec = _integral_feasible(model, node, sol)
            if not ok:
                for child in _branch(model, node, sol, spec, s.next_id):
                    s.push(child)
                s.log(node, "branched", sol.objective)
                closed = True
                break
            delta = extract_delta(model, node, sol)
            key = tuple(int(v) for v in delta.ravel())
            if key in evaluated:
                # relaxation is integral and (via Kelley + LP feasibility) no
                # stored cut is violated beyond tolerance: the node is final
                s.log(node, "integral", sol.objective)
                closed = True
                break
            rows_before = len(model._rows_ub)
            quads_before = len(model.quad_cuts)
            true_obj, x_star = callback(delta, sol.y)
            evaluated[key] = true_obj
            if true_obj < ub:
                ub = true_obj
                incumbent = Incumbent(delta, sol.y.copy(), float(true_obj), x=x_star)
            if trace is not None:
                trace(ub, min(s.open_lb(), sol.objective))
            if len(model._rows_ub) == rows_before and len(model.quad_cuts) == quads_before:
                s.log(node, "integral", sol.objective)
                closed = True
                break
            # lazy cuts installed: re-solve this same node
        if not closed:
            s.log(node, "resolve_limit", node.lb)

    lb = min(ub, s.open_lb())
    return incumbent, float(lb), s.stats
