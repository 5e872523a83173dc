"""Dense two-phase tableau simplex with variable bounds.

min c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lb <= x <= ub.

Dantzig pricing with an automatic switch to Bland's rule when the objective
stalls (anti-cycling).  The pivot loop is the hot kernel; it is compiled with
numba unless DSCO_DISABLE_NUMBA=1 selects the pure-numpy path.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import NUMBA_ENABLED

if NUMBA_ENABLED:
    from numba import njit

FEAS_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

_STATUS_OPT = 0
_STATUS_UNBOUNDED = 1
_STATUS_ITER = 2
_STATUS_STUCK = 3

# pivots smaller than this amplify roundoff enough to corrupt the tableau
_PIVOT_FLOOR = 1e-7


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = np.nan
    duals: np.ndarray | None = None  # one multiplier per (ub rows..., eq rows...)


def _pivot_loop(T, basis, max_iter, n_enter, bland):
    """Run simplex pivots on tableau T (last row = reduced costs, last col = rhs).

    Returns (status, pivot count).  Switches to Bland's rule after 64
    consecutive degenerate iterations (or runs it throughout if bland is
    set).  STUCK means an improving column had no pivot above the stability
    floor; the caller refactorizes and retries.  Only columns below n_enter
    may enter the basis (bars artificials in phase 2); any column may leave.
    """
    m = T.shape[0] - 1
    n = T.shape[1] - 1
    stall = 0
    npiv = 0
    for _ in range(max_iter):
        cost = T[m, :n_enter]
        if bland:
            enter = -1
            for j in range(n_enter):
                if cost[j] < -FEAS_TOL:
                    enter = j
                    break
        else:
            enter = int(np.argmin(cost))
            if cost[enter] >= -FEAS_TOL:
                enter = -1
        if enter < 0:
            return _STATUS_OPT, npiv

        # Harris-style two-pass ratio test: find the minimum ratio with a
        # small feasibility slack, then take the largest pivot among rows
        # within the slack (lowest basis index under Bland's rule, for the
        # anti-cycling proof).  Negative rhs entries are roundoff; clamp.
        theta = np.inf
        for i in range(m):
            a = T[i, enter]
            if a > _PIVOT_FLOOR:
                r = T[i, n]
                if r < 0.0:
                    r = 0.0
                t = (r + 1e-9) / a
                if t < theta:
                    theta = t
        leave = -1
        if np.isfinite(theta):
            best_piv = 0.0
            for i in range(m):
                a = T[i, enter]
                if a > _PIVOT_FLOOR:
                    r = T[i, n]
                    if r < 0.0:
                        r = 0.0
                    if r / a <= theta:
                        if bland:
                            if leave < 0 or basis[i] < basis[leave]:
                                leave = i
                        elif a > best_piv:
                            best_piv = a
                            leave = i
        if leave < 0:
            if cost[enter] >= -1e-6:
                # noise-level reduced cost on a numerically zero column
                T[m, enter] = 0.0
                continue
            return _STATUS_STUCK, npiv
        best = T[leave, n] / T[leave, enter]
        if best < 0.0:
            best = 0.0

        piv = T[leave, enter]
        for j in range(n + 1):
            T[leave, j] /= piv
        for i in range(m + 1):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    for j in range(n + 1):
                        T[i, j] -= f * T[leave, j]
        T[:, enter] = 0.0
        T[leave, enter] = 1.0
        basis[leave] = enter
        npiv += 1

        if best <= 1e-12:
            stall += 1
            if stall > 64:
                bland = True
        else:
            stall = 0
    return _STATUS_ITER, npiv


def _dual_pivot_loop(T, basis, max_iter, bland):
    """Dual simplex pivots: requires a dual-feasible tableau (reduced costs
    >= 0); the rhs may be negative.  Returns (status, pivot count, smallest
    |pivot| used).  STUCK means the leaving row had no usable pivot, which on
    a freshly rebuilt tableau certifies primal infeasibility.  Switches to
    Bland's rule after 64 consecutive stalls (heavy dual degeneracy would
    otherwise cycle)."""
    m = T.shape[0] - 1
    n = T.shape[1] - 1
    npiv = 0
    stall = 0
    minpiv = np.inf
    for _ in range(max_iter):
        leave = -1
        if bland:
            for i in range(m):
                if T[i, n] < -FEAS_TOL and (leave < 0 or basis[i] < basis[leave]):
                    leave = i
        else:
            worst = -FEAS_TOL
            for i in range(m):
                if T[i, n] < worst:
                    worst = T[i, n]
                    leave = i
        if leave < 0:
            return _STATUS_OPT, npiv, minpiv

        enter = -1
        if bland:
            # exact minimum ratio, lowest column index among ties
            theta = np.inf
            for j in range(n):
                a = T[leave, j]
                if a < -_PIVOT_FLOOR:
                    cj = T[m, j]
                    if cj < 0.0:
                        cj = 0.0
                    t = cj / (-a)
                    if t < theta - 1e-15:
                        theta = t
                        enter = j
        else:
            # Harris-style slack: smallest cost ratio wins, largest |pivot|
            # among ties for stability
            theta = np.inf
            for j in range(n):
                a = T[leave, j]
                if a < -_PIVOT_FLOOR:
                    cj = T[m, j]
                    if cj < 0.0:
                        cj = 0.0
                    t = (cj + 1e-9) / (-a)
                    if t < theta:
                        theta = t
            if np.isfinite(theta):
                best_piv = 0.0
                for j in range(n):
                    a = T[leave, j]
                    if a < -_PIVOT_FLOOR:
                        cj = T[m, j]
                        if cj < 0.0:
                            cj = 0.0
                        if cj / (-a) <= theta and -a > best_piv:
                            best_piv = -a
                            enter = j
        if enter < 0:
            return _STATUS_STUCK, npiv, minpiv

        obj_before = T[m, n]
        piv = T[leave, enter]
        if -piv < minpiv:
            minpiv = -piv
        for j in range(n + 1):
            T[leave, j] /= piv
        for i in range(m + 1):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    for j in range(n + 1):
                        T[i, j] -= f * T[leave, j]
        T[:, enter] = 0.0
        T[leave, enter] = 1.0
        basis[leave] = enter
        npiv += 1
        if abs(T[m, n] - obj_before) <= 1e-12 * (1.0 + abs(obj_before)):
            stall += 1
            if stall > 64:
                bland = True
        else:
            stall = 0
    return _STATUS_ITER, npiv, minpiv


if NUMBA_ENABLED:
    _pivot_loop_jit = njit(cache=True)(_pivot_loop)
    _dual_pivot_loop_jit = njit(cache=True)(_dual_pivot_loop)
else:
    _pivot_loop_jit = _pivot_loop
    _dual_pivot_loop_jit = _dual_pivot_loop


def _run_pivots(T, basis, max_iter, n_enter, bland=False):
    return _pivot_loop_jit(T, basis, max_iter, n_enter, bland)


def _refactor(T, basis, Afull, brhs):
    """Rebuild the tableau exactly from the current basis (reinversion).

    Long pivot sequences accumulate roundoff; solving B z = [A | b] restores
    the tableau to working precision.  Returns False if the basis matrix is
    singular or the rebuilt rhs is infeasible beyond tolerance.
    """
    m = Afull.shape[0]
    B = Afull[:, basis]
    try:
        sol = np.linalg.solve(B, np.column_stack([Afull, brhs]))
    except np.linalg.LinAlgError:
        return False
    rhs = sol[:, -1]
    if m and rhs.min() < -1e-6:
        return False
    np.maximum(rhs, 0.0, out=rhs)
    T[:m, :-1] = sol[:, :-1]
    T[:m, -1] = rhs
    return True


def _solve_phase(T, basis, cvec, Afull, brhs, max_iter, n_enter):
    """Pivot to optimality with periodic refactorization.

    Optimality and unboundedness are only accepted on a freshly rebuilt
    tableau.  n_enter bars artificial columns from entering in phase 2.
    If roundoff drives the basis infeasible, the last verified basis is
    restored and the search continues under Bland's rule.
    """
    fresh = False
    bland = False
    recoveries = 0
    chunk = 300
    good = basis.copy()
    remaining = max_iter
    while remaining > 0:
        status, npiv = _run_pivots(T, basis, min(remaining, chunk), n_enter, bland)
        remaining -= max(npiv, 1)
        idle = fresh and npiv == 0
        if status == _STATUS_OPT and idle:
            return _STATUS_OPT
        if status == _STATUS_STUCK and idle:
            return _STATUS_UNBOUNDED
        if _refactor(T, basis, Afull, brhs):
            good = basis.copy()
            bland = False
            if chunk < 300:
                chunk *= 2
        else:
            # roundoff drove the basis infeasible/singular mid-chunk: restore
            # the last verified basis and retry with shorter pivot chunks so
            # the rebuild happens often enough for this conditioning
            recoveries += 1
            if recoveries > 40:
                return _STATUS_ITER
            chunk = max(chunk // 4, 4)
            basis[:] = good
            if not _refactor(T, basis, Afull, brhs):
                return _STATUS_ITER
            bland = True
        _set_cost_row(T, basis, cvec)
        fresh = True
    return _STATUS_ITER


def _refactor_any(T, basis, Afull, brhs):
    """Rebuild the tableau from the basis without the rhs-sign check (the
    dual simplex maintains dual feasibility, not primal)."""
    m = Afull.shape[0]
    B = Afull[:, basis]
    try:
        sol = np.linalg.solve(B, np.column_stack([Afull, brhs]))
    except np.linalg.LinAlgError:
        return False
    T[:m, :-1] = sol[:, :-1]
    T[:m, -1] = sol[:, -1]
    return True


_VERIFY_BUDGET = 400
# a pivot below this amplifies roundoff too much to skip verification
_SAFE_PIVOT = 1e-5


def _solve_dual(T, basis, cvec, Afull, brhs, max_iter, credit=_VERIFY_BUDGET):
    """Dual-simplex analogue of _solve_phase.

    ``credit`` counts pivots applied since the tableau was last rebuilt
    exactly.  Finishes within the verification budget are accepted as-is:
    drift over a few hundred well-conditioned rank-1 updates is far below the
    feasibility tolerance, but any pivot below _SAFE_PIVOT voids the budget
    (one near-floor pivot can corrupt the tableau outright).  Past the budget
    the tableau is refactorized and, if roundoff broke
    dual feasibility of the rebuilt cost row, the last verified basis is
    restored and the pivot chunks shrink.  Returns (status, credit)."""
    fresh = False
    bland = False
    recoveries = 0
    chunk = 300
    good = basis.copy()
    remaining = max_iter
    while remaining > 0:
        status, npiv, minpiv = _dual_pivot_loop_jit(T, basis,
                                                    min(remaining, chunk), bland)
        remaining -= max(npiv, 1)
        credit += npiv
        if minpiv < _SAFE_PIVOT:
            credit = _VERIFY_BUDGET + 1
        idle = fresh and npiv == 0
        if status == _STATUS_OPT and (idle or credit <= _VERIFY_BUDGET):
            if T[-1, :-1].min() < -1e-10:
                # drift can leave slightly negative reduced costs on the warm
                # path; polish with primal pivots so the objective is honest
                _, npol = _pivot_loop_jit(T, basis, min(remaining, chunk),
                                          T.shape[1] - 1, False)
                remaining -= npol
                credit += npol
                if npol > 0 and credit > _VERIFY_BUDGET:
                    fresh = False
                    continue
            return _STATUS_OPT, credit
        if status == _STATUS_STUCK and idle:
            return _STATUS_STUCK, credit
        if _refactor_any(T, basis, Afull, brhs):
            _set_cost_row(T, basis, cvec)
            if T[-1, :-1].min() >= -1e-6:
                credit = 0
                if T[-1, :-1].min() < -FEAS_TOL and T[:-1, -1].min() >= -FEAS_TOL:
                    # primal-feasible with noise-level dual infeasibility:
                    # clamping it away would leave the objective ~1e-6 high,
                    # so clean up with exact primal pivots instead
                    _, npol = _pivot_loop_jit(T, basis, min(remaining, chunk),
                                              T.shape[1] - 1, False)
                    remaining -= npol
                    credit += npol
                good = basis.copy()
                bland = False
                if chunk < 300:
                    chunk *= 2
                np.maximum(T[-1, :-1], 0.0, out=T[-1, :-1])
                fresh = True
                continue
        recoveries += 1
        if recoveries > 40:
            return _STATUS_ITER, credit
        chunk = max(chunk // 4, 4)
        basis[:] = good
        if not _refactor_any(T, basis, Afull, brhs):
            return _STATUS_ITER, credit
        _set_cost_row(T, basis, cvec)
        np.maximum(T[-1, :-1], 0.0, out=T[-1, :-1])
        bland = True
        credit = 0
        fresh = True
    return _STATUS_ITER, credit


def _set_cost_row(T, basis, c_full):
    """Reduced-cost row for cost vector c_full given the current basis."""
    m = T.shape[0] - 1
    n = T.shape[1] - 1
    row = np.zeros(n + 1)
    row[:n] = c_full
    for i in range(m):
        cb = c_full[basis[i]]
        if cb != 0.0:
            row -= cb * T[i, :]
    T[m, :] = row


class _StandardForm:
    """Shift/split bookkeeping shared by the one-shot and incremental paths."""

    def __init__(self, nv, lb, ub):
        self.nv = nv
        self.lb_finite = np.isfinite(lb)
        self.ub_finite = np.isfinite(ub)
        cols = []
        bound_vars = []       # original vars needing a w <= ub - lb row
        for i in range(nv):
            if self.lb_finite[i]:
                cols.append(("main", i, 1.0))
                if self.ub_finite[i]:
                    bound_vars.append((len(cols) - 1, i))
            elif self.ub_finite[i]:
                cols.append(("main", i, -1.0))
            else:
                cols.append(("main", i, 1.0))
                cols.append(("neg", i, -1.0))
        self.cols = cols
        self.bound_vars = bound_vars
        self.ncols = len(cols)
        self.Amap = np.zeros((nv, self.ncols))
        for jc, (_, i, s) in enumerate(cols):
            self.Amap[i, jc] = s

    def offset(self, lb, ub):
        off = np.where(self.lb_finite, np.where(np.isfinite(lb), lb, 0.0), 0.0)
        return np.where(~self.lb_finite & self.ub_finite,
                        np.where(np.isfinite(ub), ub, 0.0), off)

    def cost(self, c):
        c_std = np.zeros(self.ncols)
        for jc, (_, i, s) in enumerate(self.cols):
            c_std[jc] = c[i] * s
        return c_std


class IncrementalDualLp:
    """Dual-simplex LP that stays warm across appended rows and bound changes.

    min c^T x  s.t.  rows x <= rhs,  lb <= x <= ub, where the standard-form
    cost is nonnegative (epigraph-style objectives), so the all-slack basis
    is always dual feasible and re-solves after adding cutting planes or
    tightening bounds take a handful of pivots instead of a cold start.
    The bound finiteness pattern must not change across set_bounds calls.
    """

    def __init__(self, c, lb, ub):
        self.c = np.asarray(c, dtype=np.float64)
        lb = np.asarray(lb, dtype=np.float64)
        ub = np.asarray(ub, dtype=np.float64)
        self.form = _StandardForm(self.c.shape[0], lb, ub)
        self.c_std = self.form.cost(self.c)
        if self.c_std.size and self.c_std.min() < 0.0:
            raise ValueError("standard-form cost must be nonnegative")
        self.raw_rows = np.zeros((0, self.c.shape[0]))
        self.raw_rhs = np.zeros(0)
        self.scales = np.zeros(0)
        self.struct_rows = np.zeros((0, self.form.ncols))
        self.set_bounds(lb, ub)
        self.T = None
        self.basis = None
        self._credit = 0

    # -- model edits ---------------------------------------------------------

    def set_bounds(self, lb, ub):
        lb = np.asarray(lb, dtype=np.float64)
        ub = np.asarray(ub, dtype=np.float64)
        if np.any(np.isfinite(lb) != self.form.lb_finite) or \
                np.any(np.isfinite(ub) != self.form.ub_finite):
            raise ValueError("bound finiteness pattern changed")
        self._offset = self.form.offset(lb, ub)
        self._bound_rhs = np.array([ub[i] - lb[i] for _, i in self.form.bound_vars])
        self._dirty_rhs = True

    def add_rows(self, rows, rhs):
        """Append <= rows (in original variable space) to the model."""
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=np.float64))
        scales = np.maximum(np.max(np.abs(rows), axis=1), 1e-12)
        scaled = rows / scales[:, None]
        struct = scaled @ self.form.Amap
        self.raw_rows = np.vstack([self.raw_rows, rows])
        self.raw_rhs = np.concatenate([self.raw_rhs, rhs])
        self.scales = np.concatenate([self.scales, scales])
        self.struct_rows = np.vstack([self.struct_rows, struct])
        if self.T is not None:
            self._append_to_tableau(struct, self._row_rhs()[-len(rhs):])
        self._dirty_rhs = True

    # -- internal assembly -----------------------------------------------------

    def _row_rhs(self):
        return (self.raw_rhs - self.raw_rows @ self._offset) / self.scales

    def _assemble(self):
        """(Afull, b): the fixed bound rows first, then user rows in arrival
        order, so appends extend the system without renumbering anything."""
        nc = self.form.ncols
        n_bound = len(self.form.bound_vars)
        m = n_bound + self.struct_rows.shape[0]
        A = np.zeros((m, nc + m))
        for k, (jc, _) in enumerate(self.form.bound_vars):
            A[k, jc] = 1.0
        A[n_bound:, :nc] = self.struct_rows
        A[:, nc:] = np.eye(m)
        b = np.concatenate([self._bound_rhs, self._row_rhs()])
        return A, b

    def _append_to_tableau(self, struct, b_new):
        """Grow the warm tableau: express each new row in the current basis
        and make its fresh slack basic."""
        nc = self.form.ncols
        k = struct.shape[0]
        m_old = self.T.shape[0] - 1
        ntot_old = self.T.shape[1] - 1

        T = np.zeros((m_old + k + 1, ntot_old + k + 1))
        T[:m_old, :ntot_old] = self.T[:m_old, :ntot_old]
        T[:m_old, -1] = self.T[:m_old, -1]
        T[-1, :ntot_old] = self.T[-1, :ntot_old]
        T[-1, -1] = self.T[-1, -1]

        for j in range(k):
            r = m_old + j
            full = np.zeros(ntot_old + k + 1)
            full[:nc] = struct[j]
            full[-1] = b_new[j]
            coeff = np.where(self.basis < nc,
                             struct[j][np.minimum(self.basis, nc - 1)], 0.0)
            full -= coeff @ T[:m_old, :]
            full[ntot_old + j] = 1.0
            T[r, :] = full
        self.basis = np.concatenate([
            self.basis, np.arange(ntot_old, ntot_old + k, dtype=np.int64)])
        self.T = T

    def solve(self, max_iter=None):
        nc = self.form.ncols
        Afull, b = self._assemble()
        m = Afull.shape[0]
        if max_iter is None:
            max_iter = 200 * (m + nc + m) + 1000

        if self.T is None or self.basis is None or self.T.shape[0] != m + 1:
            self.T = np.zeros((m + 1, nc + m + 1))
            self.T[:m, :nc + m] = Afull
            self.T[:m, -1] = b
            self.basis = np.arange(nc, nc + m, dtype=np.int64)
            _set_cost_row(self.T, self.basis, np.concatenate([self.c_std, np.zeros(m)]))
            self._credit = 0
            self._dirty_rhs = False
        elif self._dirty_rhs:
            # slack columns of an exact tableau hold B^{-1}: rhs refresh is a matvec
            self.T[:m, -1] = self.T[:m, nc:nc + m] @ b
            self._dirty_rhs = False

        cvec = np.concatenate([self.c_std, np.zeros(m)])
        status, self._credit = _solve_dual(self.T, self.basis, cvec, Afull, b,
                                           max_iter, self._credit)
        if status == _STATUS_STUCK:
            return LpSolution(INFEASIBLE)
        if status != _STATUS_OPT:
            self.T = None
            self.basis = None
            return LpSolution(ITERATION_LIMIT)
        w = np.zeros(nc + m)
        for i in range(m):
            w[self.basis[i]] = self.T[i, -1]
        x = self._offset + self.form.Amap @ w[:nc]
        return LpSolution(OPTIMAL, x=x, objective=float(self.c @ x))


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
             lb=None, ub=None, max_iter=None):
    c = np.asarray(c, dtype=np.float64)
    nv = c.shape[0]
    A_ub = np.zeros((0, nv)) if A_ub is None else np.asarray(A_ub, dtype=np.float64)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64)
    A_eq = np.zeros((0, nv)) if A_eq is None else np.asarray(A_eq, dtype=np.float64)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64)
    lb = np.full(nv, -np.inf) if lb is None else np.asarray(lb, dtype=np.float64)
    ub = np.full(nv, np.inf) if ub is None else np.asarray(ub, dtype=np.float64)

    if np.any(lb > ub + 1e-12):
        return LpSolution(INFEASIBLE)

    # row equilibration: badly scaled cut rows otherwise force tiny pivots
    row_scale_ub = np.ones(A_ub.shape[0])
    if A_ub.shape[0]:
        row_scale_ub = np.maximum(np.max(np.abs(A_ub), axis=1), 1e-12)
        A_ub = A_ub / row_scale_ub[:, None]
        b_ub = b_ub / row_scale_ub
    row_scale_eq = np.ones(A_eq.shape[0])
    if A_eq.shape[0]:
        row_scale_eq = np.maximum(np.max(np.abs(A_eq), axis=1), 1e-12)
        A_eq = A_eq / row_scale_eq[:, None]
        b_eq = b_eq / row_scale_eq

    # shift/split variables so that every standard-form variable is >= 0:
    #   x = lb + w            (lb finite; w <= ub - lb becomes an extra ub row)
    #   x = ub - w            (only ub finite)
    #   x = w_plus - w_minus  (both infinite)
    cols = []          # (kind, var, sign) per standard-form column
    offset = np.zeros(nv)
    sign = np.zeros(nv)
    extra_rows = []    # bound rows (coef_col_index, rhs)
    for i in range(nv):
        if np.isfinite(lb[i]):
            offset[i] = lb[i]
            sign[i] = 1.0
            cols.append(("main", i, 1.0))
            if np.isfinite(ub[i]):
                extra_rows.append((len(cols) - 1, ub[i] - lb[i]))
        elif np.isfinite(ub[i]):
            offset[i] = ub[i]
            sign[i] = -1.0
            cols.append(("main", i, -1.0))
        else:
            offset[i] = 0.0
            sign[i] = 1.0
            cols.append(("main", i, 1.0))
            cols.append(("neg", i, -1.0))

    ncols = len(cols)
    col_of_var = {}
    Amap = np.zeros((nv, ncols))
    for jc, (kind, i, s) in enumerate(cols):
        Amap[i, jc] = s
        if kind == "main":
            col_of_var[i] = jc

    n_ub = A_ub.shape[0]
    n_bound = len(extra_rows)
    n_eq = A_eq.shape[0]
    m = n_ub + n_bound + n_eq
    nslack = n_ub + n_bound

    A = np.zeros((m, ncols + nslack))
    b = np.zeros(m)
    A[:n_ub, :ncols] = A_ub @ Amap
    b[:n_ub] = b_ub - A_ub @ offset
    for k, (jc, rhs) in enumerate(extra_rows):
        A[n_ub + k, jc] = 1.0
        b[n_ub + k] = rhs
    A[n_ub + n_bound:, :ncols] = A_eq @ Amap
    b[n_ub + n_bound:] = b_eq - A_eq @ offset
    for k in range(nslack):
        A[k, ncols + k] = 1.0

    c_std = np.zeros(ncols + nslack)
    for jc, (_, i, s) in enumerate(cols):
        c_std[jc] = c[i] * s

    if max_iter is None:
        max_iter = 200 * (m + ncols + nslack) + 1000

    # a nonnegative cost over pure <= rows makes the all-slack basis dual
    # feasible: the dual simplex then needs no phase 1 and no artificials
    if n_eq == 0 and (c_std.size == 0 or c_std.min() >= 0.0):
        T = np.zeros((m + 1, ncols + nslack + 1))
        T[:m, :ncols + nslack] = A
        T[:m, -1] = b
        basis = np.arange(ncols, ncols + m, dtype=np.int64)
        _set_cost_row(T, basis, c_std)
        status, _ = _solve_dual(T, basis, c_std, A, b, max_iter, credit=0)
        if status == _STATUS_STUCK:
            return LpSolution(INFEASIBLE)
        if status == _STATUS_OPT:
            return _solution_from_basis(T, basis, A, c, c_std, cols, Amap,
                                        offset, np.zeros(m, dtype=bool),
                                        n_ub, n_bound, row_scale_ub, row_scale_eq)
        # numerical failure: fall through to the primal two-phase

    flipped = b < 0
    A = A.copy()
    b = b.copy()
    A[flipped] *= -1.0
    b[flipped] *= -1.0

    # initial basis: slack where its coefficient stayed +1, artificial otherwise
    basis = np.full(m, -1, dtype=np.int64)
    need_art = []
    for k in range(m):
        if k < nslack and not flipped[k]:
            basis[k] = ncols + k
        else:
            need_art.append(k)
    nart = len(need_art)
    ntot = ncols + nslack + nart
    T = np.zeros((m + 1, ntot + 1))
    T[:m, :ncols + nslack] = A
    T[:m, ntot] = b
    for a, k in enumerate(need_art):
        T[k, ncols + nslack + a] = 1.0
        basis[k] = ncols + nslack + a

    Afull = np.zeros((m, ntot))
    Afull[:, :ncols + nslack] = A
    for a, k in enumerate(need_art):
        Afull[k, ncols + nslack + a] = 1.0

    # phase 1
    if nart:
        c1 = np.zeros(ntot)
        c1[ncols + nslack:] = 1.0
        _set_cost_row(T, basis, c1)
        status = _solve_phase(T, basis, c1, Afull, b, max_iter, ntot)
        if status != _STATUS_OPT:
            # the feasibility objective is bounded below by zero, so any
            # non-optimal exit is a numerical failure
            return LpSolution(ITERATION_LIMIT)
        if -T[m, ntot] > 1e-7:
            return LpSolution(INFEASIBLE)
        # drive remaining artificials out of the basis
        for i in range(m):
            if basis[i] >= ncols + nslack:
                row = T[i, :ncols + nslack]
                j = int(np.argmax(np.abs(row)))
                if abs(row[j]) > _PIVOT_FLOOR:
                    piv = T[i, j]
                    T[i, :] /= piv
                    col = T[:, j].copy()
                    col[i] = 0.0
                    T -= np.outer(col, T[i, :])
                    T[:, j] = 0.0
                    T[i, j] = 1.0
                    basis[i] = j

    # phase 2; artificials are barred from entering the basis
    c_full = np.zeros(ntot)
    c_full[:ncols + nslack] = c_std
    _set_cost_row(T, basis, c_full)
    status = _solve_phase(T, basis, c_full, Afull, b, max_iter, ncols + nslack)
    if status == _STATUS_ITER:
        return LpSolution(ITERATION_LIMIT)
    if status == _STATUS_UNBOUNDED:
        return LpSolution(UNBOUNDED)
    return _solution_from_basis(T, basis, Afull, c, c_full, cols, Amap, offset,
                                flipped, n_ub, n_bound, row_scale_ub, row_scale_eq)


def _solution_from_basis(T, basis, Afull, c, c_full, cols, Amap, offset,
                         flipped, n_ub, n_bound, row_scale_ub, row_scale_eq):
    m, ntot = Afull.shape
    w = np.zeros(ntot)
    for i in range(m):
        w[basis[i]] = T[i, -1]
    ncols = len(cols)
    x = offset + Amap @ w[:ncols]
    obj = float(c @ x)

    # duals from the basis system B^T y = c_B (rows in ub..., bound..., eq... order)
    B = Afull[:, basis]
    cB = c_full[basis]
    try:
        y = np.linalg.solve(B.T, cB)
        y[flipped] *= -1.0
        duals = np.concatenate([y[:n_ub] / row_scale_ub,
                                y[n_ub + n_bound:] / row_scale_eq])
    except np.linalg.LinAlgError:
        duals = None
    return LpSolution(OPTIMAL, x=x, objective=obj, duals=duals)
