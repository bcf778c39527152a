#!/usr/bin/env python3
"""Compare the jitted and pure-numpy bid-update kernels.

Strategy sweeps and zone maps run thousands of solves on tiny matrices,
where per-call numpy overhead dwarfs the arithmetic; the jitted loop wins
by two orders of magnitude there (and stays ahead on large instances). Run:

    python benchmarks/bench_fisher.py [--buyers 3] [--goods 3] [--rounds 20000]

The first numba call includes JIT compilation; it is timed separately.
"""

import argparse
import time

import numpy as np

from closedmarket._kernels import _pr_loops, pr_numpy

try:
    import numba
    pr_numba = numba.njit(cache=True)(_pr_loops)
except ImportError:
    pr_numba = None


def make_instance(rng, m, n):
    weights = rng.uniform(0.5, 1.5, m)
    util = rng.uniform(0.05, 1.0, (m, n))
    bids = weights[:, None] * util / util.sum(axis=1)[:, None]
    return weights, util, bids


def run(kernel, weights, util, bids, rounds, repeats):
    best = np.inf
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = kernel(weights, util, bids.copy(), rounds, 0.0)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--buyers", type=int, default=3)
    parser.add_argument("--goods", type=int, default=3)
    parser.add_argument("--rounds", type=int, default=20000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    weights, util, bids = make_instance(rng, args.buyers, args.goods)

    t_numpy, out_numpy = run(pr_numpy, weights, util, bids, args.rounds, args.repeats)
    print(f"numpy : {t_numpy * 1e3:9.2f} ms  ({args.rounds} rounds, "
          f"{args.buyers}x{args.goods})")

    if pr_numba is None:
        print("numba : not available")
        return

    t_compile = time.perf_counter()
    pr_numba(weights, util, bids.copy(), 1, 0.0)
    t_compile = time.perf_counter() - t_compile
    t_numba, out_numba = run(pr_numba, weights, util, bids, args.rounds, args.repeats)
    print(f"numba : {t_numba * 1e3:9.2f} ms  (compile/cache load: {t_compile:.2f} s)")
    print(f"speedup: {t_numpy / t_numba:.1f}x")

    drift = np.abs(out_numpy[0] - out_numba[0]).max()
    print(f"max bid difference between backends: {drift:.3e}")


if __name__ == "__main__":
    main()
