#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Workload sizes mirror the round-based learner's defaults (hundreds of
thousands of draws per round over a ~128-point domain) and the
elimination learner's estimator batches. Run:

    python3 benchmarks/bench_kernels.py [--reps 7]
"""

import argparse
import time

import numpy as np

from validgen._accel import load_backend


def _time(fn, reps):
    fn()  # warm-up (and numba compilation)
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_workloads(rng):
    probs = rng.dirichlet(np.ones(128))
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    u = rng.random(435_716)

    rows = rng.random((24, 128)) * (rng.random((24, 128)) < 0.4)
    rows /= rows.sum(axis=1, keepdims=True)
    mu = rows.mean(axis=0)
    nz = np.flatnonzero(mu > 0)
    codes = nz[rng.integers(0, len(nz), 30_000)]
    inv_vals = rng.choice([0.0, 0.5, 1.0], 30_000)

    lo = rng.integers(0, 12, (18_496, 2))
    hi = lo + rng.integers(0, 4, (18_496, 2))
    pts = rng.integers(0, 16, (128, 2))
    cnts = rng.integers(1, 40, 128)
    neg = rng.integers(0, 16, (8, 2))

    kept = (rng.random((64, 36)) < 1 / 3).astype(np.int64)
    cand = (rng.random(36) < 1 / 3).astype(np.int64)

    return {
        "sample_from_cdf (435k draws)": lambda k: k.sample_from_cdf(cdf, u),
        "weighted_invalidity_estimates (24x30k)": lambda k: k.weighted_invalidity_estimates(
            rows, mu, codes, inv_vals, 100.0
        ),
        "acceptance_probs (24x128)": lambda k: k.acceptance_probs(rows, mu, 100.0),
        "box_stats (18k boxes x 128 pts)": lambda k: k.box_stats(
            lo.astype(np.int64), hi.astype(np.int64), pts.astype(np.int64), cnts.astype(np.int64), neg.astype(np.int64)
        ),
        "max_intersection (64 kept)": lambda k: k.max_intersection(cand, kept),
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--reps", type=int, default=7)
    args = parser.parse_args()

    backends = {}
    backends["numpy"] = load_backend("numpy")
    try:
        backends["numba"] = load_backend("numba")
    except Exception as exc:  # pragma: no cover
        print(f"numba backend unavailable ({exc}); benchmarking numpy only")

    workloads = build_workloads(np.random.default_rng(0))
    width = max(map(len, workloads)) + 2
    header = f"{'kernel':<{width}}" + "".join(f"{name:>12}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, call in workloads.items():
        times = {bk: _time(lambda k=kmod: call(k), args.reps) for bk, kmod in backends.items()}
        row = f"{name:<{width}}" + "".join(f"{times[bk] * 1e3:>10.2f}ms" for bk in backends)
        if len(backends) == 2:
            row += f"{times['numpy'] / times['numba']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
