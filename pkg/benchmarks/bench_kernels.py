"""Benchmark the compiled kernels against their pure-numpy fallbacks.

Times the three hot paths — per-seed cascade sweeps, exact power-set loss
enumeration, and the tail-cutoff KS scan — in both variants on synthetic
inputs of a few sizes.  Run as::

    python3 benchmarks/bench_kernels.py [--repeat 5]

The compiled column appears only when the package selected numba (default
when it is importable; leave MULTIRISK_NUMBA unset or set it to 1).  A
warm-up call precedes timing, so compilation cost is excluded.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from multirisk._kernels import (
    USING_NUMBA,
    exact_powerset_sum_numba,
    exact_powerset_sum_numpy,
    ks_scan_numba,
    ks_scan_numpy,
    seed_sweep_numba,
    seed_sweep_numpy,
)


def _random_network(b: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    mask = rng.random((b, b)) < 0.15
    np.fill_diagonal(mask, False)
    w = np.where(mask, rng.random((b, b)) * 0.6, 0.0)
    v = rng.random(b)
    v /= v.sum()
    return w, v


def _time(func, repeat: int) -> float:
    func()  # warm-up: triggers compilation for jitted variants
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        func()
        best = min(best, time.perf_counter() - start)
    return best


def _report(name: str, numpy_s: float, jit_s: float | None) -> None:
    if jit_s is None:
        print(f"{name:<40s} numpy {numpy_s * 1e3:9.3f} ms")
    else:
        print(
            f"{name:<40s} numpy {numpy_s * 1e3:9.3f} ms   numba {jit_s * 1e3:9.3f} ms"
            f"   speedup {numpy_s / jit_s:6.2f}x"
        )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions (best is reported)")
    args = parser.parse_args()
    print(f"compiled kernels selected: {USING_NUMBA}")
    if not USING_NUMBA:
        print("(numpy only; install numba / unset MULTIRISK_NUMBA=0 for the comparison)")

    for b in (30, 100, 300):
        w, v = _random_network(b, seed=b)
        numpy_s = _time(lambda: seed_sweep_numpy(w, v, 1.0), args.repeat)
        jit_s = _time(lambda: seed_sweep_numba(w, v, 1.0), args.repeat) if USING_NUMBA else None
        _report(f"seed sweep        b={b}", numpy_s, jit_s)

    for b in (12, 16, 18):
        w, v = _random_network(b, seed=b)
        p = np.random.default_rng(b).random(b) * 0.05
        numpy_s = _time(lambda: exact_powerset_sum_numpy(w, v, p, 1.0), args.repeat)
        jit_s = _time(lambda: exact_powerset_sum_numba(w, v, p, 1.0), args.repeat) if USING_NUMBA else None
        _report(f"exact loss sum    b={b} (2^{b} subsets)", numpy_s, jit_s)

    for n in (1_000, 10_000):
        rng = np.random.default_rng(n)
        z = np.sort(rng.pareto(1.5, n) + 1.0)
        cand = np.arange(0, n - 10, max(1, (n - 10) // 100), dtype=np.int64)
        numpy_s = _time(lambda: ks_scan_numpy(z, cand), args.repeat)
        jit_s = _time(lambda: ks_scan_numba(z, cand), args.repeat) if USING_NUMBA else None
        _report(f"tail cutoff scan  n={n}", numpy_s, jit_s)


if __name__ == "__main__":
    main()
