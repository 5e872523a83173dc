"""Command-line front end: instance generation, distributed solves over the
in-process or TCP backend, the enumeration oracle, and performance-profile
CSV emission."""

import csv
import glob as globmod
import json
import os
import sys
import threading
from pathlib import Path

import click
import numpy as np

from . import io as fio
from . import model as mdl
from .driver import OPTIMAL, TIME_LIMIT, Settings, SolveReport, solve
from .engine import brute_force_oracle
from .transport import DEFAULT_TIMEOUT, InprocCluster, TcpHub, TcpWorld

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TIME_LIMIT = 2

PROFILE_LIMITS = np.geomspace(0.5, 50.0, 30)


def _log_level():
    return os.environ.get("DSCO_LOG", "error").lower()


def _verbosity():
    return {"error": 0, "info": 1, "debug": 2}.get(_log_level(), 0)


@click.group()
def main():
    """Distributed sparse convex optimization solver."""


@main.command()
@click.option("--type", "kind", type=click.Choice(["classification", "regression"]),
              default="classification", show_default=True)
@click.option("--n", type=int, required=True, help="Number of features.")
@click.option("--p", type=int, required=True, help="Samples per node.")
@click.option("--nodes", type=int, default=2, show_default=True)
@click.option("--kappa", type=int, required=True, help="Sparsity budget.")
@click.option("--lambda", "lam", type=float, default=0.1, show_default=True)
@click.option("--noise-sd", type=float, default=0.1, show_default=True,
              help="Response noise (regression only).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--name", default="instance", show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def gen(kind, n, p, nodes, kappa, lam, noise_sd, seed, name, out):
    """Generate per-node problem files and a settings template."""
    if kappa > n or kappa < 1:
        raise click.UsageError(f"--kappa must be in [1, {n}]")
    if kind == "classification":
        inst = mdl.generate_dslogr(n=n, p=p, N=nodes, kappa=kappa, lam=lam, seed=seed)
    else:
        inst = mdl.generate_dslinr(n=n, p=p, N=nodes, kappa=kappa, lam=lam,
                                   noise_sd=noise_sd, seed=seed)
    paths = fio.write_problem_files(inst, name, out)
    settings_path = Path(out) / "settings.json"
    settings_path.write_text(fio.canonical_json(fio.settings_doc(Settings())) + "\n")
    for path in paths + [settings_path]:
        click.echo(str(path))


def _solve_inproc(inst, settings):
    size = inst.num_nodes
    cluster = InprocCluster(size, timeout=settings.time_limit + DEFAULT_TIMEOUT)
    reports = [None] * size
    errors = [None] * size

    def work(rank):
        try:
            reports[rank] = solve(cluster[rank], inst, settings)
        except BaseException as exc:  # surfaced after join
            errors[rank] = exc

    threads = [threading.Thread(target=work, args=(rank,)) for rank in range(1, size)]
    for t in threads:
        t.start()
    work(0)
    for t in threads:
        t.join()
    for exc in errors:
        if exc is not None:
            raise exc
    return reports[0]


def _tcp_worker(rank, size, host, port, problem_dir, settings_json, normalize):
    # child-process entry: reconstruct everything from primitives
    settings, _ = fio.parse_settings(json.loads(settings_json))
    inst = fio.parse_problem_dir(problem_dir, normalize=normalize)
    world = TcpWorld(rank, size, host, port,
                     timeout=settings.time_limit + DEFAULT_TIMEOUT)
    try:
        solve(world, inst, settings)
    finally:
        world.close()


def _solve_tcp(inst, settings, problem_dir, normalize, port_base):
    import multiprocessing as mp

    size = inst.num_nodes
    timeout = settings.time_limit + DEFAULT_TIMEOUT
    hub = TcpHub(size, port=port_base, timeout=timeout)
    settings_json = fio.canonical_json(fio.settings_doc(settings, normalize))
    ctx = mp.get_context("spawn")
    procs = [ctx.Process(target=_tcp_worker,
                         args=(rank, size, hub.host, hub.port, str(problem_dir),
                               settings_json, normalize))
             for rank in range(1, size)]
    for proc in procs:
        proc.start()
    world = TcpWorld(0, size, hub.host, hub.port, timeout=timeout)
    try:
        report = solve(world, inst, settings)
    finally:
        world.close()
        for proc in procs:
            proc.join(timeout)
    return report


@main.command()
@click.option("--problem-dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--settings", "settings_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", type=click.Choice(["inproc", "tcp"]), default="inproc",
              show_default=True)
@click.option("--port-base", type=int, default=0, show_default=True,
              help="TCP listen port (0 picks a free port).")
@click.option("--out", type=click.Path(dir_okay=False), help="Results file path.")
def run(problem_dir, settings_path, backend, port_base, out):
    """Solve the problem in --problem-dir across one rank per node file."""
    try:
        if settings_path:
            settings, normalize = fio.load_settings(settings_path)
        else:
            settings, normalize = Settings(), False
        if settings.verbosity == 0:
            settings.verbosity = _verbosity()
        inst = fio.parse_problem_dir(problem_dir, normalize=normalize)
        digest = fio.problem_digest(problem_dir)
        if backend == "inproc":
            report = _solve_inproc(inst, settings)
        else:
            report = _solve_tcp(inst, settings, problem_dir, normalize, port_base)
    except (fio.SchemaViolation, fio.MissingRank, fio.DimensionMismatch,
            ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)

    doc = fio.results_doc(report, digest, settings)
    text = fio.canonical_json(doc)
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)
    if report.status == OPTIMAL:
        sys.exit(EXIT_OK)
    if report.status == TIME_LIMIT:
        sys.exit(EXIT_TIME_LIMIT)
    sys.exit(EXIT_ERROR)


@main.command()
@click.option("--problem-dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False))
def oracle(problem_dir, out):
    """Exact reference solve by support enumeration (small instances only)."""
    try:
        inst = fio.parse_problem_dir(problem_dir)
        digest = fio.problem_digest(problem_dir)
        support, x, val = brute_force_oracle(inst)
    except (fio.SchemaViolation, fio.MissingRank, fio.DimensionMismatch,
            ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    report = SolveReport(status=OPTIMAL, objective=float(val), x=np.asarray(x),
                         support=tuple(int(k) for k in support),
                         lb_trace=[float(val)], ub_trace=[float(val)])
    text = fio.canonical_json(fio.results_doc(report, digest))
    if out:
        Path(out).write_text(text + "\n")
    else:
        click.echo(text)


@main.command()
@click.option("--results-glob", required=True,
              help="Glob over results JSON files written by `run`.")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Output CSV path.")
def profile(results_glob, out):
    """Solved-fraction-vs-time-budget data from recorded runs."""
    paths = sorted(globmod.glob(results_glob))
    if not paths:
        click.echo(f"error: no files match {results_glob!r}", err=True)
        sys.exit(EXIT_ERROR)
    by_config = {}
    for p in paths:
        doc = json.loads(Path(p).read_text())
        st = doc.get("settings", {})
        config = f"{st.get('algorithm', 'unknown')}/{st.get('sparsity_mode', 'unknown')}"
        wall = sum(doc.get("phase_times", {}).values())
        solved = doc.get("status") == OPTIMAL
        by_config.setdefault(config, []).append((wall, solved))
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["config", "time_limit", "fraction_solved"])
        for config in sorted(by_config):
            runs = by_config[config]
            for limit in PROFILE_LIMITS:
                frac = sum(1 for wall, ok in runs if ok and wall <= limit) / len(runs)
                w.writerow([config, f"{limit:.6g}", f"{frac:.6g}"])
    click.echo(out)


if __name__ == "__main__":
    main()
