"""Local objective oracles, truncated-Newton NLP solves, the distributed
relaxed consensus ADMM primal solver, the continuous-relaxation solve, and
the support-enumeration ground-truth oracle."""

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from . import kernels
from .model import ObjectiveKind


class NlpFailure(RuntimeError):
    pass


class TooLarge(ValueError):
    pass


# ---------------------------------------------------------------------------
# smooth oracles

class LogisticOracle:
    """sum_l log(1 + exp(-(theta^T X_l) y_l)) + (lam/2)||theta||^2, y in {-1,+1}."""

    def __init__(self, X, y, lam):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.y = np.ascontiguousarray(y, dtype=np.float64)
        self.lam = float(lam)

    def value(self, theta):
        z = (self.X @ theta) * self.y
        return kernels.softplus_neg_sum(z) + 0.5 * self.lam * float(theta @ theta)

    def value_grad(self, theta):
        z = (self.X @ theta) * self.y
        val = kernels.softplus_neg_sum(z) + 0.5 * self.lam * float(theta @ theta)
        s = kernels.sigmoid_neg(z, np.empty_like(z))
        grad = -(self.X.T @ (self.y * s)) + self.lam * theta
        return val, grad

    def hess_operator(self, theta):
        z = (self.X @ theta) * self.y
        w = kernels.sigmoid_prod(z, np.empty_like(z))

        def hv(v):
            return self.X.T @ (w * (self.X @ v)) + self.lam * v

        return hv


class LeastSquaresOracle:
    """||X theta - b||^2 + (lam/2)||theta||^2."""

    def __init__(self, X, b, lam):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.b = np.ascontiguousarray(b, dtype=np.float64)
        self.lam = float(lam)

    def value(self, theta):
        r = self.X @ theta - self.b
        return kernels.sumsq(r) + 0.5 * self.lam * float(theta @ theta)

    def value_grad(self, theta):
        r = self.X @ theta - self.b
        val = kernels.sumsq(r) + 0.5 * self.lam * float(theta @ theta)
        grad = 2.0 * (self.X.T @ r) + self.lam * theta
        return val, grad

    def hess_operator(self, theta):
        def hv(v):
            return 2.0 * (self.X.T @ (self.X @ v)) + self.lam * v

        return hv


def oracle_for(obj):
    if obj.kind == ObjectiveKind.LOGISTIC:
        return LogisticOracle(obj.data.X, obj.data.y, obj.lam)
    return LeastSquaresOracle(obj.data.X, obj.data.y, obj.lam)


def eval_value_grad(oracle, x):
    return oracle.value_grad(np.asarray(x, dtype=np.float64))


def strong_convexity_constant(obj):
    """m with hessian(f) >= m*I: lam for logistic, lam + 2*lambda_min(X^T X) for
    least squares."""
    if obj.kind == ObjectiveKind.LOGISTIC:
        return float(obj.lam)
    gram = obj.data.X.T @ obj.data.X
    lam_min = float(np.linalg.eigvalsh(gram)[0])
    return float(obj.lam) + 2.0 * max(lam_min, 0.0)


class _SumOracle:
    def __init__(self, oracles):
        self.oracles = oracles

    def value(self, theta):
        return sum(o.value(theta) for o in self.oracles)

    def value_grad(self, theta):
        val, grad = 0.0, np.zeros_like(theta)
        for o in self.oracles:
            v, g = o.value_grad(theta)
            val += v
            grad += g
        return val, grad

    def hess_operator(self, theta):
        ops = [o.hess_operator(theta) for o in self.oracles]

        def hv(v):
            out = ops[0](v)
            for op in ops[1:]:
                out += op(v)
            return out

        return hv


class _ProxOracle:
    """f(x) + (rho/2)||x - v||^2."""

    def __init__(self, base, v, rho):
        self.base = base
        self.v = v
        self.rho = rho

    def value_grad(self, theta):
        val, grad = self.base.value_grad(theta)
        d = theta - self.v
        return val + 0.5 * self.rho * float(d @ d), grad + self.rho * d

    def hess_operator(self, theta):
        hv = self.base.hess_operator(theta)
        rho = self.rho
        return lambda v: hv(v) + rho * v


class _RestrictedOracle:
    """Oracle over the subvector x[idx], off-support coordinates fixed at 0."""

    def __init__(self, base, idx, n):
        self.base = base
        self.idx = idx
        self.n = n

    def embed(self, sub):
        full = np.zeros(self.n)
        full[self.idx] = sub
        return full

    def value_grad(self, sub):
        val, grad = self.base.value_grad(self.embed(sub))
        return val, grad[self.idx]

    def hess_operator(self, sub):
        hv = self.base.hess_operator(self.embed(sub))
        idx, n = self.idx, self.n

        def sub_hv(v):
            full = np.zeros(n)
            full[idx] = v
            return hv(full)[idx]

        return sub_hv


# ---------------------------------------------------------------------------
# truncated Newton with CG inner loop

def _cg(hv, rhs, tol, max_iter):
    x = np.zeros_like(rhs)
    r = rhs.copy()
    p = r.copy()
    rs = float(r @ r)
    if rs == 0.0:
        return x
    for _ in range(max_iter):
        hp = hv(p)
        php = float(p @ hp)
        if php <= 1e-16 * float(p @ p):
            break  # negligible curvature; fall back to current iterate
        alpha = rs / php
        x += alpha * p
        r -= alpha * hp
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= tol:
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x


def truncated_newton(oracle, x0, grad_tol=1e-9, max_iter=200, curvature=0.0):
    """Minimize a smooth convex oracle (value_grad + hess_operator) to
    ||grad|| <= grad_tol.

    `curvature` is a known strong-convexity lower bound; it certifies stalled
    points via the gap bound ||g||^2 / (2 m) when the line search cannot make
    progress at the value's floating-point floor."""
    x = np.asarray(x0, dtype=np.float64).copy()
    if x.size == 0:
        return x, oracle.value_grad(x)[0]
    val, g = oracle.value_grad(x)
    stalled = False
    no_progress = 0
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm <= grad_tol:
            return x, val
        hv = oracle.hess_operator(x)
        cg_tol = min(0.5, np.sqrt(gnorm)) * gnorm
        d = _cg(hv, -g, cg_tol, max_iter=4 * x.size + 10)
        slope = float(g @ d)
        if slope >= 0.0:
            d = -g
            slope = -gnorm * gnorm
        # predicted decrease below float resolution: we are at the floor
        if -slope <= 4e-16 * (1.0 + abs(val)):
            return x, val
        t = 1.0
        while t > 1e-14:
            xn = x + t * d
            vn, gn = oracle.value_grad(xn)
            if vn <= val + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            stalled = True
            break
        # stop when the objective has hit the floating-point floor
        if vn >= val - 1e-15 * (1.0 + abs(val)):
            no_progress += 1
            if no_progress >= 3:
                x, val, g = xn, vn, gn
                stalled = True
                break
        else:
            no_progress = 0
        x, val, g = xn, vn, gn
    gnorm = float(np.linalg.norm(g))
    # accept numerical-floor stalls: close to the target, or the remaining
    # objective improvement is below float resolution at this value scale
    if gnorm <= 100.0 * grad_tol or gnorm * gnorm <= 4e-15 * (1.0 + abs(val)):
        return x, val
    if curvature > 0.0 and gnorm * gnorm / (2.0 * curvature) <= 1e-12 * (1.0 + abs(val)):
        return x, val
    where = "line search stalled" if stalled else f"{max_iter} iterations exhausted"
    raise NlpFailure(f"no convergence ({where}, grad norm {gnorm:.3e})")


def solve_local_prox(oracle, v, rho, support_mask, x0=None, grad_tol=1e-9):
    """argmin f(x) + (rho/2)||x - v||^2 with off-support coordinates fixed at 0."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    n = v.shape[0]
    idx = np.where(support_mask)[0]
    if idx.size == 0:
        return np.zeros(n)
    prox = _ProxOracle(oracle, v, rho)
    sub = _RestrictedOracle(prox, idx, n)
    start = np.zeros(idx.size) if x0 is None else np.asarray(x0)[idx]
    # the prox term alone guarantees curvature >= rho on the subspace
    x_sub, _ = truncated_newton(sub, start, grad_tol=grad_tol, curvature=rho)
    return sub.embed(x_sub)


def solve_restricted_centralized(inst, support):
    """Centralized minimizer of sum_i f_i(x) over x supported on `support`."""
    n = inst.n
    idx = np.asarray(sorted(support), dtype=np.intp)
    total = _SumOracle([oracle_for(o) for o in inst.objectives])
    if idx.size == 0:
        zero = np.zeros(n)
        return zero, total.value(zero)
    sub = _RestrictedOracle(total, idx, n)
    m = sum(float(o.lam) for o in inst.objectives)  # cheap curvature bound
    x_sub, val = truncated_newton(sub, np.zeros(idx.size), grad_tol=1e-10,
                                  curvature=m)
    return sub.embed(x_sub), val


# ---------------------------------------------------------------------------
# distributed primal solver (relaxed consensus ADMM over the hypergraph)

@dataclass
class AdmmConfig:
    rho: float = 1.0
    alpha: float = 1.6
    eps_primal: float = 1e-6
    eps_dual: float = 1e-6
    max_iter: int = 5000

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise ValueError("alpha must be in (0, 2)")
        if self.rho <= 0:
            raise ValueError("rho must be positive")


@dataclass
class PrimalSolution:
    x: np.ndarray              # this rank's local solution (n,)
    y: np.ndarray              # (K, n) consensus variables, identical on all ranks
    objective: float           # sum_i f_i(x_i)
    objective_consensus: float  # sum_i f_i(y_{j(i)})
    residual: float            # max_{i, j in edges(i)} ||x_i - y_j||_inf
    status: str                # "converged" | "max_iterations"
    iterations: int


class AdmmState:
    """Warm-start carrier: one per rank, reused across consecutive supports."""

    def __init__(self):
        self.x = None
        self.y = None
        self.u = None


def _rhadmm_loop(world, inst, cfg, post_y, support_mask, state=None):
    """Shared ADMM iteration for both the fixed-support primal and the
    continuous relaxation.  post_y maps the raw per-edge average to the
    feasible y (support masking or l1/box projection)."""
    rank, N = world.rank, world.size
    if N != inst.num_nodes:
        raise ValueError(f"world size {N} != number of nodes {inst.num_nodes}")
    if inst.linear.m > 0:
        raise NotImplementedError("general linear constraints are not supported "
                                  "in the distributed primal solve")
    hg = inst.hypergraph
    K, n = hg.num_edges, inst.n
    my_edges = [j for j, e in enumerate(hg.edges) if rank in e]
    deg = len(my_edges)
    counts = np.array([len(e) for e in hg.edges], dtype=np.float64)
    oracle = oracle_for(inst.objectives[rank])

    x = np.zeros(n)
    y = np.zeros((K, n))
    u = np.zeros((deg, n))
    if state is not None and state.x is not None:
        x, y, u = state.x.copy(), state.y.copy(), state.u.copy()
        if support_mask is not None:
            x[~support_mask] = 0.0
            y[:, ~support_mask] = 0.0
            u[:, ~support_mask] = 0.0

    status = "max_iterations"
    it = 0
    for it in range(1, cfg.max_iter + 1):
        v = np.zeros(n)
        for a, j in enumerate(my_edges):
            v += y[j] - u[a]
        v /= deg
        x = solve_local_prox(oracle, v, deg * cfg.rho,
                             np.ones(n, bool) if support_mask is None else support_mask,
                             x0=x)

        contrib = np.zeros((K, n))
        for a, j in enumerate(my_edges):
            x_hat = cfg.alpha * x + (1.0 - cfg.alpha) * y[j]
            contrib[j] += x_hat + u[a]
        total = world.allreduce(contrib.ravel()).reshape(K, n)
        y_new = post_y(total / counts[:, None])

        for a, j in enumerate(my_edges):
            x_hat = cfg.alpha * x + (1.0 - cfg.alpha) * y[j]
            u[a] += x_hat - y_new[j]

        local_res = max(float(np.max(np.abs(x - y_new[j]))) for j in my_edges)
        primal_res = float(world.allreduce([local_res], op="max")[0])
        dual_res = cfg.rho * float(np.max(np.abs(y_new - y)))
        y = y_new
        if primal_res <= cfg.eps_primal and dual_res <= cfg.eps_dual:
            status = "converged"
            break

    if state is not None:
        state.x, state.y, state.u = x.copy(), y.copy(), u.copy()

    rep = hg.edge_of_node(rank)
    local_obj = oracle.value(x)
    local_obj_cons = oracle.value(y[rep])
    sums = world.allreduce([local_obj, local_obj_cons])
    local_res = max(float(np.max(np.abs(x - y[j]))) for j in my_edges)
    residual = float(world.allreduce([local_res], op="max")[0])
    return PrimalSolution(x=x, y=y, objective=float(sums[0]),
                          objective_consensus=float(sums[1]),
                          residual=residual, status=status, iterations=it)


def solve_primal_rhadmm(world, inst, delta, cfg, state=None):
    """Consensus ADMM for the fixed-binary primal: delta is a (K, n) 0/1 array."""
    delta = np.asarray(delta, dtype=np.float64).reshape(inst.hypergraph.num_edges, inst.n)
    kappa = inst.sparsity.kappa
    if np.any(delta.sum(axis=1) > kappa + 1e-9):
        raise ValueError("delta violates the cardinality budget")
    masks = delta > 0.5
    # a node in several edges sees the intersection of its edges' supports
    rank_mask = np.ones(inst.n, bool)
    for j, e in enumerate(inst.hypergraph.edges):
        if world.rank in e:
            rank_mask &= masks[j]

    def post_y(avg):
        out = np.where(masks, avg, 0.0)
        return out

    return _rhadmm_loop(world, inst, cfg, post_y, rank_mask, state=state)


def solve_initial_relaxation(world, inst, cfg):
    """Continuous relaxation: delta in [0,1] eliminated, leaving per-edge
    {||y_j||_1 <= M_j * kappa, ||y_j||_inf <= M_j}; ADMM with projected y-update."""
    if inst.sparsity.big_m is None:
        raise ValueError("big-M values must be set before the relaxation solve")
    big_m = inst.sparsity.big_m
    kappa = inst.sparsity.kappa

    def post_y(avg):
        out = np.empty_like(avg)
        for j in range(avg.shape[0]):
            out[j] = kernels.project_l1_box(avg[j], big_m[j] * kappa, big_m[j])
        return out

    return _rhadmm_loop(world, inst, cfg, post_y, None)


# ---------------------------------------------------------------------------
# ground-truth enumeration oracle

def brute_force_oracle(inst, limit=1_000_000):
    """Enumerate all supports of size <= kappa; ties broken by the
    lexicographically smallest support tuple."""
    n, kappa = inst.n, inst.sparsity.kappa
    total = sum(comb(n, k) for k in range(kappa + 1))
    if total > limit:
        raise TooLarge(f"{total} candidate supports exceed the enumeration bound {limit}")

    best = []
    best_val = np.inf
    for k in range(kappa + 1):
        for support in itertools.combinations(range(n), k):
            x, val = solve_restricted_centralized(inst, support)
            if val < best_val - 1e-9:
                best = [(support, x, val)]
                best_val = val
            elif val <= best_val + 1e-9:
                best.append((support, x, val))
                best_val = min(best_val, val)
    support, x, val = min(best, key=lambda t: t[0])
    return support, x, val
