"""Compare the numba-compiled kernels against the pure-numpy fallbacks.

The numpy timings come from a subprocess launched with DSCO_DISABLE_NUMBA=1
so both flavours are measured through the public ``dsco.kernels`` names.

Usage: python3 benchmarks/bench_kernels.py [--size 200000] [--repeats 50]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _bench_one(fn, args, repeats):
    fn(*args)  # warm up (numba compiles here)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmarks(size, repeats):
    from dsco import kernels

    rng = np.random.default_rng(0)
    z = rng.standard_normal(size) * 5.0
    out = np.empty_like(z)
    a = np.abs(rng.standard_normal(size))
    cases = {
        "softplus_neg_sum": (kernels.softplus_neg_sum, (z,)),
        "sigmoid_neg": (kernels.sigmoid_neg, (z, out)),
        "sigmoid_prod": (kernels.sigmoid_prod, (z, out)),
        "sumsq": (kernels.sumsq, (z,)),
        "l1_box_shrink_sum": (kernels.l1_box_shrink_sum, (a, 1.0, 0.3)),
    }
    return {name: _bench_one(fn, args, repeats) for name, (fn, args) in cases.items()}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=200_000)
    ap.add_argument("--repeats", type=int, default=50)
    ap.add_argument("--emit-json", action="store_true",
                    help="Print raw timings as JSON (used by the subprocess).")
    args = ap.parse_args()

    if args.emit_json:
        print(json.dumps(run_benchmarks(args.size, args.repeats)))
        return

    from dsco import kernels
    if not kernels.NUMBA_ENABLED:
        sys.exit("run without DSCO_DISABLE_NUMBA set to benchmark the numba path")

    fast = run_benchmarks(args.size, args.repeats)
    env = dict(os.environ, DSCO_DISABLE_NUMBA="1")
    raw = subprocess.run(
        [sys.executable, __file__, "--size", str(args.size),
         "--repeats", str(args.repeats), "--emit-json"],
        env=env, capture_output=True, text=True, check=True)
    slow = json.loads(raw.stdout)

    print(f"vector size {args.size}, best of {args.repeats} runs")
    print(f"{'kernel':<20} {'numba (us)':>12} {'numpy (us)':>12} {'speedup':>9}")
    for name in fast:
        print(f"{name:<20} {fast[name] * 1e6:>12.1f} {slow[name] * 1e6:>12.1f} "
              f"{slow[name] / fast[name]:>8.2f}x")


if __name__ == "__main__":
    main()
