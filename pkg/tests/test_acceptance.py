"""End-to-end acceptance suite.

Each test prints one PASS line (via pytest -v) for one acceptance property:
oracle equivalence, cross-algorithm agreement, bound sandwich, cut validity,
gradient/convexity checks, distributed-vs-centralized equivalence, transport
collective semantics, and the scaled two-node benchmark with profile output.
"""

import json
import time

import numpy as np
import pytest

from dsco import cuts as cu
from dsco import engine as eng
from dsco import io as fio
from dsco import model as mdl
from dsco.driver import Settings, SolveReport, solve
from conftest import make_instance, run_ranks, solve_distributed

RELATIVE_TOL = 1e-5
SANDWICH_TOL = 1e-7


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


# ---------------------------------------------------------------------------
# oracle suite: >= 50 instances, both kinds / modes / algorithms

def _suite_cases():
    cases = []
    rng = np.random.default_rng(2026)
    for i in range(52):
        kind = "logr" if i % 2 == 0 else "linr"
        if kind == "logr":
            n = int(rng.integers(5, 9))
            p = int(rng.integers(30, 81))
            lam = float(rng.choice([0.1, 0.5]))
            kappa = int(rng.integers(1, 3))
        else:
            n = int(rng.integers(5, 13))
            p = int(rng.integers(30, 201))
            lam = float(rng.choice([0.05, 0.1, 0.5]))
            kappa = int(rng.integers(1, 4))
        N = int(rng.integers(1, 4))
        mode = ("bigm", "sos1")[(i // 2) % 2]
        cases.append(dict(kind=kind, n=n, p=p, N=N, kappa=min(kappa, n),
                          lam=lam, mode=mode, seed=900 + i))
    return cases


@pytest.fixture(scope="module")
def oracle_suite():
    """Solve every case with both algorithms; keep reports and oracle values."""
    records = []
    t0 = time.monotonic()
    for case in _suite_cases():
        inst = make_instance(case["kind"], n=case["n"], p=case["p"], N=case["N"],
                             kappa=case["kappa"], lam=case["lam"], seed=case["seed"])
        sup, _, val = eng.brute_force_oracle(inst)
        reports = {}
        for algorithm in ("dihoa", "dipoa"):
            st = Settings(algorithm=algorithm, sparsity_mode=case["mode"])
            reports[algorithm] = solve_distributed(inst, st)
        records.append(dict(case=case, inst=inst, oracle_support=sup,
                            oracle_value=val, reports=reports))
    elapsed = time.monotonic() - t0
    return records, elapsed


def test_oracle_equivalence(oracle_suite):
    records, elapsed = oracle_suite
    assert len(records) >= 50
    worst = 0.0
    for rec in records:
        want = rec["oracle_value"]
        for algorithm, rep in rec["reports"].items():
            label = f"{rec['case']} {algorithm}"
            assert rep.status == "optimal", f"{label}: status {rep.status}"
            worst = max(worst, _rel(rep.objective, want))
            assert _rel(rep.objective, want) <= RELATIVE_TOL, \
                f"{label}: objective {rep.objective} vs oracle {want}"
            if tuple(rep.support) != rec["oracle_support"]:
                # a different support is fine only when it ties in value
                _, tied = eng.solve_restricted_centralized(rec["inst"], rep.support)
                assert _rel(tied, want) <= RELATIVE_TOL, \
                    f"{label}: support {rep.support} is not value-tied"
    assert elapsed < 600.0, f"oracle suite took {elapsed:.0f}s (budget 600s)"
    print(f"PASS oracle equivalence: {len(records)} instances x 2 algorithms, "
          f"max rel err {worst:.2e}, {elapsed:.0f}s")


def test_cross_algorithm_agreement(oracle_suite):
    records, _ = oracle_suite
    worst = 0.0
    for rec in records:
        a = rec["reports"]["dihoa"].objective
        b = rec["reports"]["dipoa"].objective
        worst = max(worst, _rel(a, b))
        assert _rel(a, b) <= RELATIVE_TOL, f"{rec['case']}: dihoa {a} vs dipoa {b}"
        rep = rec["reports"]["dihoa"]
        assert rep.rebuilds_after_switch == 0, rec["case"]
        q = rep.q_switch if rep.q_switch is not None else rep.iterations
        assert rep.master_rebuilds <= q + 1, \
            f"{rec['case']}: {rep.master_rebuilds} rebuilds, switch at {rep.q_switch}"
    print(f"PASS cross-algorithm agreement: max rel diff {worst:.2e}, "
          "rebuild accounting holds")


def test_bound_sandwich(oracle_suite):
    records, _ = oracle_suite
    checked = 0
    for rec in records:
        want = rec["oracle_value"]
        for algorithm, rep in rec["reports"].items():
            label = f"{rec['case']} {algorithm}"
            lbs, ubs = rep.lb_trace, rep.ub_trace
            assert lbs and ubs, label
            for lb in lbs:
                assert lb <= want + SANDWICH_TOL, f"{label}: lb {lb} above oracle {want}"
            for ub in ubs:
                assert ub >= want - SANDWICH_TOL, f"{label}: ub {ub} below oracle {want}"
            assert all(a <= b + 1e-12 for a, b in zip(lbs, lbs[1:])), \
                f"{label}: lb trace not nondecreasing"
            assert all(a >= b - 1e-12 for a, b in zip(ubs, ubs[1:])), \
                f"{label}: ub trace not nonincreasing"
            checked += 1
    print(f"PASS bound sandwich: {checked} runs, tolerance {SANDWICH_TOL}")


# ---------------------------------------------------------------------------
# cut validity

def test_cut_validity():
    rng = np.random.default_rng(7)
    pairs = 0
    insts = [mdl.with_big_m(make_instance("logr", n=6, p=40, N=1, kappa=2,
                                          lam=0.2, seed=70)),
             mdl.with_big_m(make_instance("linr", n=6, p=40, N=1, kappa=2,
                                          lam=0.2, seed=71))]
    for inst in insts:
        oracle = eng.oracle_for(inst.objectives[0])
        m = eng.strong_convexity_constant(inst.objectives[0])
        M = inst.sparsity.big_m[0]
        for _ in range(25):
            x0 = rng.uniform(-M, M, inst.n)
            lin = cu.gen_first_order_cut(oracle, x0)
            quad = cu.gen_second_order_cut(oracle, x0, m)
            for _ in range(100):
                x = rng.uniform(-M, M, inst.n)
                f = oracle.value(x)
                assert lin.value(x) <= f + 1e-9
                assert quad.value(x) <= f + 1e-9
                np.testing.assert_allclose(
                    quad.value(x) - lin.value(x),
                    0.5 * m * float((x - x0) @ (x - x0)), rtol=1e-12, atol=1e-12)
                pairs += 2
    assert pairs >= 10000
    print(f"PASS cut validity: {pairs} (cut, point) pairs, quadratic dominance exact")


# ---------------------------------------------------------------------------
# gradients and convexity

def test_gradient_and_convexity():
    rng = np.random.default_rng(8)
    for kind in ("logr", "linr"):
        inst = make_instance(kind, n=6, p=50, N=1, kappa=2, lam=0.3, seed=72)
        obj = inst.objectives[0]
        oracle = eng.oracle_for(obj)
        m = eng.strong_convexity_constant(obj)
        for _ in range(100):
            x = rng.uniform(-2, 2, inst.n)
            _, g = oracle.value_grad(x)
            h = 1e-6
            g_num = np.zeros_like(x)
            for k in range(x.size):
                e = np.zeros_like(x)
                e[k] = h
                g_num[k] = (oracle.value(x + e) - oracle.value(x - e)) / (2 * h)
            denom = max(1.0, float(np.linalg.norm(g_num)))
            assert float(np.linalg.norm(g - g_num)) / denom < 1e-6
            hv = oracle.hess_operator(x)
            v = rng.standard_normal(x.size)
            assert float(v @ hv(v)) / float(v @ v) >= m - 1e-8
    print("PASS gradient/convexity: 100 points per objective kind, "
          "Rayleigh quotients above the strong convexity constant")


# ---------------------------------------------------------------------------
# distributed primal vs centralized, and backend bit-identity

def test_distributed_vs_centralized():
    rng = np.random.default_rng(9)
    worst_obj, worst_res = 0.0, 0.0
    for i in range(20):
        kind = ("logr", "linr")[i % 2]
        n = int(rng.integers(5, 9))
        N = int(rng.integers(2, 4))
        inst = make_instance(kind, n=n, p=int(rng.integers(30, 81)), N=N,
                             kappa=2, lam=0.1, seed=800 + i)
        support = tuple(sorted(rng.choice(n, size=2, replace=False).tolist()))
        delta = np.zeros((1, n))
        delta[0, list(support)] = 1.0
        cfg = eng.AdmmConfig()
        sols = run_ranks(N, lambda w, r: eng.solve_primal_rhadmm(w, inst, delta, cfg))
        _, want = eng.solve_restricted_centralized(inst, support)
        worst_obj = max(worst_obj, _rel(sols[0].objective, want))
        worst_res = max(worst_res, sols[0].residual)
        assert _rel(sols[0].objective, want) <= RELATIVE_TOL
        assert sols[0].residual <= 1e-6
    print(f"PASS distributed vs centralized: 20 instances, max rel err "
          f"{worst_obj:.2e}, max residual {worst_res:.2e}")


def test_backend_bit_identity():
    inst = make_instance("logr", n=6, p=40, N=2, kappa=2, lam=0.1, seed=73)
    delta = np.zeros((1, 6))
    delta[0, [0, 3]] = 1.0
    cfg = eng.AdmmConfig()
    runs = {}
    for backend in ("inproc", "tcp"):
        sols = run_ranks(2, lambda w, r: eng.solve_primal_rhadmm(w, inst, delta, cfg),
                         backend=backend)
        runs[backend] = sols
    for r in range(2):
        a, b = runs["inproc"][r], runs["tcp"][r]
        assert a.x.tobytes() == b.x.tobytes()
        assert a.y.tobytes() == b.y.tobytes()
        assert a.objective == b.objective
        assert a.iterations == b.iterations

    # full solves agree bit-for-bit too (timings excluded)
    reports = {backend: solve_distributed(inst, Settings(), backend=backend)
               for backend in ("inproc", "tcp")}
    ra, rb = reports["inproc"], reports["tcp"]
    assert ra.x.tobytes() == rb.x.tobytes()
    assert ra.objective == rb.objective
    assert ra.lb_trace == rb.lb_trace and ra.ub_trace == rb.ub_trace
    print("PASS backend bit-identity: inproc and tcp byte-identical")


# ---------------------------------------------------------------------------
# transport collective semantics (both backends)

@pytest.mark.parametrize("backend", ["inproc", "tcp"])
def test_transport_semantics(backend):
    rng = np.random.default_rng(10)
    for trial in range(10):
        size = int(rng.integers(1, 5))
        length = int(rng.integers(0, 12))
        root = int(rng.integers(0, size))
        bufs = [rng.standard_normal(length) for _ in range(size)]

        out = run_ranks(size, lambda w, r: w.broadcast(root, bufs[r]), backend=backend)
        for r in range(size):
            np.testing.assert_array_equal(out[r], bufs[root])

        out = run_ranks(size, lambda w, r: w.allgather(bufs[r]), backend=backend)
        want = np.concatenate(bufs)
        for r in range(size):
            np.testing.assert_array_equal(out[r], want)

        out = run_ranks(size, lambda w, r: w.gather(root, bufs[r]), backend=backend)
        np.testing.assert_array_equal(out[root], want)
        assert all(out[r] is None for r in range(size) if r != root)

        # deterministic rank-ascending sum, and allreduce == reduce + broadcast
        out = run_ranks(size, lambda w, r: w.allreduce(bufs[r]), backend=backend)
        acc = bufs[0].copy()
        for bb in bufs[1:]:
            acc = acc + bb
        for r in range(size):
            assert out[r].tobytes() == acc.tobytes()

        def reduce_bcast(w, r):
            g = w.reduce(root, bufs[r])
            return w.broadcast(root, g if r == root else np.zeros(0))

        out2 = run_ranks(size, reduce_bcast, backend=backend)
        for r in range(size):
            assert out2[r].tobytes() == out[r].tobytes()

        chunks = [rng.standard_normal(3) for _ in range(size)]
        out = run_ranks(size,
                        lambda w, r: w.scatter(root, chunks if r == root else None),
                        backend=backend)
        for r in range(size):
            np.testing.assert_array_equal(out[r], chunks[r])
    print(f"PASS transport semantics ({backend}): broadcast/gather/allgather/"
          "reduce/allreduce/scatter over randomized worlds")


# ---------------------------------------------------------------------------
# scaled two-node benchmark + profile output

def test_scaled_benchmark(tmp_path):
    from click.testing import CliRunner
    from dsco import cli

    rng = np.random.default_rng(11)
    solved = 0
    results = []
    for i in range(20):
        kind = "logr" if i % 4 != 3 else "linr"   # 15 classification, 5 regression
        n = int(rng.integers(20, 31))
        p = int(rng.integers(1000, 2501))
        sparsity = 0.8 if i % 2 == 0 else 0.9
        kappa = int(np.ceil((1.0 - sparsity) * n))
        inst = make_instance(kind, n=n, p=p, N=2, kappa=kappa, lam=0.1,
                             seed=1100 + i)
        st = Settings(algorithm="dihoa", relative_gap=1e-5, time_limit=100.0)
        rep = solve_distributed(inst, st, timeout=600.0)
        if rep.status == "optimal":
            solved += 1
        results.append(rep)
        fio.write_results(tmp_path / f"bench{i:02d}.json", rep, digest="-",
                          settings=st)

    assert solved >= 18, f"only {solved}/20 benchmark instances solved"

    runner = CliRunner()
    out = tmp_path / "profile.csv"
    res = runner.invoke(cli.main, ["profile",
                                   "--results-glob", str(tmp_path / "bench*.json"),
                                   "--out", str(out)])
    assert res.exit_code == 0, res.output
    rows = out.read_text().strip().splitlines()[1:]
    fracs = [float(r.split(",")[2]) for r in rows]
    limits = [float(r.split(",")[1]) for r in rows]
    assert len(fracs) == 30
    assert limits[0] == pytest.approx(0.5) and limits[-1] == pytest.approx(50.0)
    assert all(a <= b + 1e-12 for a, b in zip(fracs, fracs[1:]))
    print(f"PASS scaled benchmark: {solved}/20 solved within 100s, "
          "profile curve monotone over 0.5-50s")
