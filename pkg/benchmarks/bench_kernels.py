"""Throughput comparison of the numba kernels against their numpy twins.

Usage: python benchmarks/bench_kernels.py [--universe N] [--ticks N]

Times each kernel on a synthetic per-tick workload and an end-to-end AC
run under both backends.  SLIDEMON_NUMBA=0 runs would use the numpy path
everywhere; here the backend is switched explicitly.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from slidemon import GeneratorSpec, RunConfig, run_simulation
from slidemon import _kernels as _k
from slidemon.window import WindowConfig


def _time(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_scans(universe: int, ticks: int, rng):
    counts = rng.integers(0, 50, universe).astype(np.int64)
    results = {}
    for backend in ("numpy", "numba"):
        _k.set_backend(backend)
        last = np.zeros(universe, dtype=np.int64)
        off = np.ones(universe, dtype=np.bool_)
        _k.scan_ac(counts, last.copy(), off.copy(), 1000, 0.01)  # warm up jit

        def run():
            ls = last.copy()
            of = off.copy()
            for t in range(ticks):
                _k.scan_ac(counts, ls, of, 1000 + t, 0.01)

        results[backend] = _time(run)
    return results


def bench_rank(universe: int, ticks: int, rng):
    counts = rng.integers(0, 50, universe).astype(np.int64)
    targets = np.linspace(1, counts.sum(), 40).astype(np.int64)
    results = {}
    for backend in ("numpy", "numba"):
        _k.set_backend(backend)
        _k.rank_select(counts, targets)

        def run():
            for _ in range(ticks):
                _k.rank_select(counts, targets)

        results[backend] = _time(run)
    return results


def bench_end_to_end():
    spec = GeneratorSpec(kind="zipf", universe=200, rate=10, duration=3000,
                         seed=7, zipf_s=1.1)
    cfg = RunConfig(window=WindowConfig(200), protocol="ac", epsilon=0.1,
                    generators=[spec], audit_every=50)
    results = {}
    for backend in ("numpy", "numba"):
        _k.set_backend(backend)
        run_simulation(cfg)  # warm up jit + caches
        results[backend] = _time(lambda: run_simulation(cfg), repeat=3)
    return results


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--universe", type=int, default=512)
    parser.add_argument("--ticks", type=int, default=5000)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    rows = [
        ("scan_ac", bench_scans(args.universe, args.ticks, rng)),
        ("rank_select", bench_rank(args.universe, args.ticks, rng)),
        ("ac end-to-end", bench_end_to_end()),
    ]
    print(f"{'kernel':16s} {'numpy [s]':>12s} {'numba [s]':>12s} {'speedup':>9s}")
    for name, res in rows:
        speedup = res["numpy"] / res["numba"] if res["numba"] > 0 else float("inf")
        print(f"{name:16s} {res['numpy']:12.4f} {res['numba']:12.4f} {speedup:8.1f}x")
    _k.set_backend(_k._default_backend())


if __name__ == "__main__":
    main()
