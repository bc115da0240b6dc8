"""Benchmark the rainflow kernel: numba-compiled vs pure-numpy fallback.

Usage:
    python3 benchmarks/benchmark_rainflow.py [--series 2000] [--hours 8760]

The jit path is skipped automatically when numba is unavailable or
``PLAN_DISABLE_NUMBA`` is set.
"""

import argparse
import time

import numpy as np

from decarbplan.kernels import (numba_enabled, rainflow_cycles,
                                rainflow_cycles_reference)


def make_series(rng, hours):
    """Noisy daily charge/discharge swing, like a normalized SoC trace."""
    t = np.arange(hours)
    base = 0.6 + 0.35 * np.sin(t / 24 * 2 * np.pi)
    return np.clip(base + 0.05 * rng.standard_normal(hours), 0.0, 1.0)


def bench(fn, batches, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for series in batches:
            fn(series)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--series", type=int, default=2000,
                    help="number of SoC traces")
    ap.add_argument("--hours", type=int, default=8760,
                    help="length of each trace")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    batches = [make_series(rng, args.hours) for _ in range(args.series)]

    ref = bench(rainflow_cycles_reference, batches)
    print(f"pure python/numpy: {ref:8.3f} s "
          f"({args.series} x {args.hours}-hour traces)")
    if numba_enabled():
        rainflow_cycles(batches[0])           # trigger compilation
        jit = bench(rainflow_cycles, batches)
        print(f"numba jit:         {jit:8.3f} s  (speedup {ref / jit:.1f}x)")
    else:
        print("numba path disabled or unavailable; only the fallback ran")


if __name__ == "__main__":
    main()
