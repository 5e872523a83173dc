"""Orchestration of the hybrid (multi-tree then single-tree) and pure
multi-tree outer-approximation algorithms across ranks.

Rank 0 owns the master problem and cut storage; every rank participates in
the distributed primal solves.  All control decisions are taken on rank 0
and broadcast, so the ranks stay in lockstep."""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import model as mdl
from .cuts import CutStorage, LinearCut, QuadraticCut
from .engine import (AdmmConfig, AdmmState, oracle_for, solve_initial_relaxation,
                     solve_primal_rhadmm, strong_convexity_constant)
from .master import BnbConfig, MasterModel, bnb_single_tree, bnb_solve

OPTIMAL = "optimal"
TIME_LIMIT = "time_limit"
NODE_LIMIT = "node_limit"
INFEASIBLE = "infeasible"

_OP_CONTINUE = 0.0
_OP_OPTIMAL = 1.0
_OP_SWITCH = 2.0
_OP_TIME = 3.0
_OP_PRIMAL = 4.0
_OP_STOP = 5.0
_OP_NODELIM = 6.0


@dataclass
class Settings:
    algorithm: str = "dihoa"          # dihoa | dipoa
    relative_gap: float = 1e-5
    absolute_gap: float = 1e-6        # tau
    switch_tol: float = 1e-3          # epsilon for the multi->single switch
    switch_mode: str = "relative"     # relative | absolute lb improvement
    time_limit: float = 100.0
    max_oa_iters: int = 100
    cut_policy: str = "per-phase"     # linear | quadratic | per-phase
    sparsity_mode: str = "both"       # bigm | sos1 | both
    verbosity: int = 0
    rho: float = 1.0
    alpha: float = 1.6
    eps_primal: float = 1e-6
    eps_dual: float = 1e-6
    max_admm_iters: int = 5000
    node_limit: int = 1_000_000
    # per-master-solve node budget during the hybrid multi-tree phase: on
    # large instances a weak early master would otherwise spend the whole
    # time budget enumerating one tree instead of reaching the switch
    multi_tree_node_limit: int = 200

    def __post_init__(self):
        if self.relative_gap <= 0 or self.absolute_gap <= 0:
            raise ValueError("gaps must be positive")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.algorithm not in ("dihoa", "dipoa"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")

    def admm(self):
        return AdmmConfig(rho=self.rho, alpha=self.alpha, eps_primal=self.eps_primal,
                          eps_dual=self.eps_dual, max_iter=self.max_admm_iters)


@dataclass
class SolveReport:
    status: str
    objective: float = np.inf
    x: np.ndarray | None = None
    support: tuple = ()
    lb_trace: list = field(default_factory=list)
    ub_trace: list = field(default_factory=list)
    q_switch: int | None = None
    iterations: int = 0
    cut_counts: dict = field(default_factory=dict)
    primal_solves: int = 0
    phase_times: dict = field(default_factory=dict)
    master_rebuilds: int = 0
    rebuilds_after_switch: int = 0
    bnb_nodes: int = 0
    consensus_residual: float = 0.0
    warnings: list = field(default_factory=list)
    big_m: list = field(default_factory=list)


def gap(ub, lb):
    """(ub - lb) / max(1e-10, |ub|); +inf for an infinite ub."""
    if not np.isfinite(ub):
        return np.inf
    return (ub - lb) / max(1e-10, abs(ub))


def check_switch(lb_trace, eps, mode="relative"):
    """True when the lower-bound improvement has flattened out."""
    if len(lb_trace) < 2:
        raise ValueError("need at least two lower bounds")
    improvement = lb_trace[-1] - lb_trace[-2]
    if mode == "relative":
        return improvement / max(1.0, abs(lb_trace[-1])) <= eps
    return improvement <= eps


class _Run:
    """Per-rank state for one solve."""

    def __init__(self, world, inst, settings):
        self.world = world
        self.inst = inst
        self.settings = settings
        self.rank = world.rank
        self.admm_cfg = settings.admm()
        self.admm_state = AdmmState()
        self.oracle = oracle_for(inst.objectives[world.rank])
        self.sc_constant = strong_convexity_constant(inst.objectives[world.rank])
        self.start = time.monotonic()
        self.deadline = self.start + settings.time_limit
        self.report = SolveReport(status=OPTIMAL, big_m=list(inst.sparsity.big_m))
        self.storage = CutStorage() if world.rank == 0 else None
        self.master = None
        self.ub = np.inf
        self.lb = -np.inf
        self.best_y = None
        self.best_residual = 0.0
        self.n = inst.n
        self.K = inst.hypergraph.num_edges

    # -- collective helpers -------------------------------------------------

    def _bcast(self, payload):
        return self.world.broadcast(0, payload)

    def solve_primal(self, delta):
        sol = solve_primal_rhadmm(self.world, self.inst, delta, self.admm_cfg,
                                  state=self.admm_state)
        self.report.primal_solves += 1
        return sol

    def gather_cuts(self, sol, kind):
        """Every rank shares (m_i, f_i(x_i), x_i, grad f_i(x_i)); rank 0 builds cuts."""
        val, grad = self.oracle.value_grad(sol.x)
        payload = np.concatenate([[self.sc_constant, val], sol.x, grad])
        flat = self.world.allgather(payload)
        if self.rank != 0:
            return []
        per = 2 + 2 * self.n
        cuts = []
        for i in range(self.world.size):
            rec = flat[i * per:(i + 1) * per]
            m_i, f_i = rec[0], rec[1]
            x_i, g_i = rec[2:2 + self.n], rec[2 + self.n:]
            if kind == "quadratic" and m_i > 0:
                cuts.append(QuadraticCut(i, x_i.copy(), float(f_i), g_i.copy(), float(m_i)))
            else:
                cuts.append(LinearCut(i, x_i.copy(), float(f_i), g_i.copy()))
        return cuts

    def install_cuts(self, cuts):
        for cut in cuts:
            if self.storage.add(cut) == CutStorage.ADDED and self.master is not None:
                self.master.add_cut(cut)

    def cut_kind(self, phase):
        policy = self.settings.cut_policy
        if policy in ("linear", "quadratic"):
            return policy
        if self.settings.algorithm == "dipoa":
            return "linear"
        # per-phase: second order during multi-tree, first order after the switch
        return "quadratic" if phase == 2 else "linear"

    def update_incumbent(self, sol):
        if sol.objective_consensus < self.ub:
            self.ub = sol.objective_consensus
            self.best_y = sol.y.copy()
            self.best_residual = sol.residual

    def record(self, lb, ub):
        # reported bounds are the running envelope (both remain valid)
        lb = max(lb, self.report.lb_trace[-1]) if self.report.lb_trace else lb
        ub = min(ub, self.report.ub_trace[-1]) if self.report.ub_trace else ub
        self.report.lb_trace.append(float(lb))
        self.report.ub_trace.append(float(ub))

    def finish(self, status):
        r = self.report
        r.status = status
        r.objective = float(self.ub)
        if self.best_y is not None:
            rep = self.inst.hypergraph.edge_of_node(0)
            x = self.best_y[rep]
            r.x = x.copy()
            r.support = tuple(int(k) for k in np.nonzero(x)[0])
            r.consensus_residual = float(self.best_residual)
        if self.rank == 0 and self.storage is not None:
            r.cut_counts = {"linear": self.storage.count("linear"),
                            "quadratic": self.storage.count("quadratic")}
        return r


def _terminal_status(run, settings):
    if run.ub - run.lb <= settings.absolute_gap:
        return OPTIMAL
    if gap(run.ub, run.lb) <= settings.relative_gap:
        return OPTIMAL
    return None


def run_dihoa(world, inst, settings):
    return _run(world, inst, settings, hybrid=True)


def run_dipoa(world, inst, settings):
    return _run(world, inst, settings, hybrid=False)


def _run(world, inst, settings, hybrid):
    violations = mdl.validate_instance(inst)
    if violations:
        raise ValueError("invalid instance: " + "; ".join(violations))
    if inst.sparsity.big_m is None:
        inst = mdl.with_big_m(inst)
    mode = mdl.SparsityMode(settings.sparsity_mode)
    if inst.sparsity.mode != mode:
        inst = replace(inst, sparsity=replace(inst.sparsity, mode=mode))

    run = _Run(world, inst, settings)
    t0 = time.monotonic()

    # ---- initialization: continuous relaxation ----------------------------
    relax = solve_initial_relaxation(world, inst, run.admm_cfg)
    rep0 = inst.hypergraph.edge_of_node(0)
    y0 = relax.y[rep0]
    support0 = np.abs(y0) > 1e-6
    kappa = inst.sparsity.kappa
    if int(support0.sum()) <= kappa:
        # relaxed point is already feasible for the sparsity budget; polish it
        delta0 = np.tile(support0.astype(float), (run.K, 1))
        sol = run.solve_primal(delta0)
        run.update_incumbent(sol)
        if run.ub - relax.objective_consensus <= max(settings.absolute_gap, 1e-9):
            run.lb = run.ub - settings.absolute_gap
            run.record(run.lb, run.ub)
            run.report.phase_times["init"] = time.monotonic() - t0
            run.report.q_switch = None
            return run.finish(OPTIMAL)

    # N first-order cuts at the relaxed per-node points, then build the master
    init_cuts = run.gather_cuts(relax, "linear")
    if run.rank == 0:
        run.master = MasterModel(inst)
        run.install_cuts(init_cuts)
    run.report.phase_times["init"] = time.monotonic() - t0

    # ---- multi-tree loop ---------------------------------------------------
    t1 = time.monotonic()
    q = 0
    switched = False
    status = None
    master_lbs = []
    while True:
        q += 1
        run.report.iterations = q
        # master solve on rank 0, then broadcast [lb, delta]
        if run.rank == 0:
            cap = settings.node_limit - run.report.bnb_nodes
            if hybrid:
                cap = min(cap, settings.multi_tree_node_limit)
            cfg = BnbConfig(node_limit=max(cap, 1), deadline=run.deadline,
                            log=_node_logger(settings))
            inc, lb_q, stats = bnb_solve(run.master, cfg)
            run.report.master_rebuilds += 1
            run.report.bnb_nodes += stats.nodes
            if stats.status == "time_limit":
                payload = np.concatenate([[_OP_TIME, lb_q], np.zeros(run.K * run.n)])
            elif inc is None or run.report.bnb_nodes >= settings.node_limit:
                payload = np.concatenate([[_OP_NODELIM, lb_q], np.zeros(run.K * run.n)])
            else:
                payload = np.concatenate([[_OP_CONTINUE, lb_q], inc.delta.ravel()])
            payload = run._bcast(payload)
        else:
            payload = run._bcast(np.zeros(2 + run.K * run.n))
        code, lb_q = payload[0], float(payload[1])
        if code in (_OP_NODELIM, _OP_TIME):
            run.lb = max(run.lb, lb_q)
            run.record(run.lb, run.ub)
            status = NODE_LIMIT if code == _OP_NODELIM else TIME_LIMIT
            break
        run.lb = max(run.lb, lb_q)
        master_lbs.append(lb_q)
        delta_q = payload[2:].reshape(run.K, run.n)

        sol = run.solve_primal(delta_q)
        run.update_incumbent(sol)
        run.record(run.lb, run.ub)
        if settings.verbosity >= 1 and run.rank == 0:
            print(f"[q={q}] lb={run.lb:.8g} ub={run.ub:.8g} gap={gap(run.ub, run.lb):.3g}")

        # control decision on rank 0
        if run.rank == 0:
            status_q = _terminal_status(run, settings)
            if status_q == OPTIMAL:
                op = _OP_OPTIMAL
            elif time.monotonic() > run.deadline:
                op = _OP_TIME
            elif hybrid and (
                    (len(master_lbs) >= 2 and check_switch(master_lbs, settings.switch_tol,
                                                           settings.switch_mode))
                    or q >= settings.max_oa_iters):
                op = _OP_SWITCH
            else:
                op = _OP_CONTINUE
            op = float(run._bcast([op])[0])
        else:
            op = float(run._bcast([0.0])[0])

        if op == _OP_OPTIMAL:
            status = OPTIMAL
            break
        if op == _OP_TIME:
            status = TIME_LIMIT
            break
        if op == _OP_SWITCH:
            switched = True
            break
        # generate and install this iteration's outer approximations
        cuts = run.gather_cuts(sol, run.cut_kind(phase=2))
        if run.rank == 0:
            run.install_cuts(cuts)

    run.report.phase_times["multi_tree"] = time.monotonic() - t1
    run.report.q_switch = q if switched else None

    if not switched:
        return run.finish(status)

    # ---- single-tree phase (hybrid only) ------------------------------------
    t2 = time.monotonic()
    if run.rank == 0:
        status = _root_single_tree(run, settings)
        run._bcast(np.concatenate([[_OP_STOP, _status_code(status), run.lb, run.ub]]))
    else:
        status = _follower_single_tree(run)
    run.report.phase_times["single_tree"] = time.monotonic() - t2
    return run.finish(status)


def _status_code(status):
    return {OPTIMAL: 0.0, TIME_LIMIT: 1.0, NODE_LIMIT: 2.0}[status]


def _status_from_code(code):
    return {0.0: OPTIMAL, 1.0: TIME_LIMIT, 2.0: NODE_LIMIT}[code]


def _node_logger(settings):
    if settings.verbosity >= 2:
        return lambda line: print("  " + line)
    return None


def _root_single_tree(run, settings):
    def callback(delta, _y_lp):
        payload = np.concatenate([[_OP_PRIMAL], delta.ravel()])
        run._bcast(payload)
        sol = run.solve_primal(delta)
        run.update_incumbent(sol)
        cuts = run.gather_cuts(sol, run.cut_kind(phase=3))
        run.install_cuts(cuts)
        return sol.objective_consensus, sol.y[run.inst.hypergraph.edge_of_node(0)].copy()

    def trace(ub, open_lb):
        run.lb = max(run.lb, min(open_lb, ub))
        run.record(run.lb, min(ub, run.ub))

    cfg = BnbConfig(node_limit=settings.node_limit, deadline=run.deadline,
                    gap_tol=settings.absolute_gap, rel_gap=settings.relative_gap,
                    log=_node_logger(settings))
    inc, lb, stats = bnb_single_tree(run.master, callback, cfg,
                                     initial_ub=run.ub, trace=trace)
    run.report.bnb_nodes += stats.nodes
    run.report.rebuilds_after_switch = 0  # the tree persists by construction
    run.lb = max(run.lb, min(lb, run.ub))
    run.record(run.lb, run.ub)
    if stats.status == "node_limit":
        return NODE_LIMIT
    if stats.status == "time_limit":
        return TIME_LIMIT
    term = _terminal_status(run, settings)
    return term if term is not None else OPTIMAL


def _follower_single_tree(run):
    while True:
        payload = run._bcast(np.zeros(1 + run.K * run.n))
        op = payload[0]
        if op == _OP_PRIMAL:
            delta = payload[1:1 + run.K * run.n].reshape(run.K, run.n)
            sol = run.solve_primal(delta)
            run.update_incumbent(sol)
            run.gather_cuts(sol, run.cut_kind(phase=3))
        elif op == _OP_STOP:
            run.lb = max(run.lb, float(payload[2]))
            run.record(run.lb, run.ub)
            return _status_from_code(float(payload[1]))


def solve(world, inst, settings):
    """Top-level entry: big-M estimation, the configured algorithm, and the
    post-hoc big-M binding check with doubling re-solves (at most 3)."""
    if inst.sparsity.big_m is None:
        inst = mdl.with_big_m(inst)
    runner = run_dihoa if settings.algorithm == "dihoa" else run_dipoa
    report = runner(world, inst, settings)
    for attempt in range(3):
        if report.x is None:
            break
        min_m = min(inst.sparsity.big_m)
        if float(np.max(np.abs(report.x))) < 0.999 * min_m:
            break
        report.warnings.append(
            f"big-M binding: ||x*||_inf within 0.1% of M={min_m:g}; "
            f"re-solving with doubled M (attempt {attempt + 1})")
        warnings = report.warnings
        inst = mdl.with_big_m(inst, [2.0 * m for m in inst.sparsity.big_m])
        report = runner(world, inst, settings)
        report.warnings = warnings + report.warnings
    return report
