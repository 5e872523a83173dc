"""Shared helpers: inproc/tcp world runners and small instance factories."""

import threading

import numpy as np
import pytest

from dsco import model as mdl
from dsco.transport import InprocCluster, TcpHub, TcpWorld


def run_ranks(size, fn, timeout=300.0, backend="inproc", port=0):
    """Run fn(world, rank) on every rank of a fresh world; return per-rank results.

    Exceptions raised on any rank are re-raised on the caller's thread.
    """
    if backend == "inproc":
        cluster = InprocCluster(size, timeout=timeout)
        worlds = [cluster[r] for r in range(size)]
    else:
        hub = TcpHub(size, port=port, timeout=timeout)
        worlds = [TcpWorld(r, size, hub.host, hub.port, timeout=timeout)
                  for r in range(size)]
    results = [None] * size
    errors = []

    def work(r):
        try:
            results[r] = fn(worlds[r], r)
        except BaseException as exc:
            errors.append(exc)

    threads = [threading.Thread(target=work, args=(r,)) for r in range(size)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if backend == "tcp":
        for w in worlds:
            w.close()
        hub.join()
    if errors:
        raise errors[0]
    return results


def solve_distributed(inst, settings, backend="inproc", timeout=300.0):
    """Solve an instance across its node count; return the rank-0 report."""
    from dsco.driver import solve

    size = inst.num_nodes
    reports = run_ranks(size, lambda world, r: solve(world, inst, settings),
                        timeout=timeout, backend=backend)
    return reports[0]


def make_instance(kind, n, p, N, kappa, lam, seed):
    if kind == "logr":
        return mdl.generate_dslogr(n=n, p=p, N=N, kappa=kappa, lam=lam, seed=seed)
    return mdl.generate_dslinr(n=n, p=p, N=N, kappa=kappa, lam=lam,
                               noise_sd=0.1, seed=seed)


@pytest.fixture
def tiny_logr():
    return make_instance("logr", n=5, p=40, N=2, kappa=2, lam=0.1, seed=11)


@pytest.fixture
def tiny_linr():
    return make_instance("linr", n=5, p=40, N=2, kappa=2, lam=0.1, seed=12)
