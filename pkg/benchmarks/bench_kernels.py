#!/usr/bin/env python3
"""Benchmark the batched banded Cholesky kernels: numba vs pure numpy.

The workloads mirror the solver's hot loop: one small banded SPD system per
angular cell, factored once and back-substituted every source iteration.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --repeats 5
"""

import argparse
import time

import numpy as np

from rteslab import kernels


def make_batch(rng, n_batch, kd, m):
    """Diagonally dominant lower-banded SPD batch."""
    ab = rng.uniform(-1.0, 1.0, (n_batch, kd + 1, m))
    ab[:, 0, :] = 2.0 * (kd + 1) + rng.uniform(0.0, 1.0, (n_batch, m))
    for i in range(1, kd + 1):
        ab[:, i, m - i:] = 0.0
    return ab


def time_backend(ab, rhs, use_numba, repeats):
    fact = None
    t_factor = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fact = kernels.cholesky_banded_many(ab, use_numba=use_numba)
        t_factor.append(time.perf_counter() - t0)
    t_solve = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernels.solve_banded_many(fact, rhs, use_numba=use_numba)
        t_solve.append(time.perf_counter() - t0)
    return min(t_factor), min(t_solve)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not kernels.NUMBA_AVAILABLE:
        print("numba not available; benchmarking the numpy path only")

    # (angular cells, unknowns per block, sub-diagonals)
    cases = [
        (512, 257, 1),
        (4096, 257, 1),
        (8192, 257, 1),
        (256, 513, 1),
        (512, 129, 3),
    ]
    rng = np.random.default_rng(0)

    if kernels.NUMBA_AVAILABLE:
        warm = make_batch(rng, 4, 1, 16)
        kernels.solve_banded_many(kernels.cholesky_banded_many(warm, use_numba=True),
                                  np.ones((4, 16)), use_numba=True)
        print("JIT warmup done\n")

    header = f"{'batch':>6} {'m':>5} {'kd':>3} | {'numpy factor':>13} {'numpy solve':>12}"
    if kernels.NUMBA_AVAILABLE:
        header += f" | {'numba factor':>13} {'numba solve':>12} | {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n_batch, m, kd in cases:
        ab = make_batch(rng, n_batch, kd, m)
        rhs = rng.standard_normal((n_batch, m))
        f_np, s_np = time_backend(ab, rhs, False, args.repeats)
        line = f"{n_batch:>6} {m:>5} {kd:>3} | {f_np * 1e3:>11.2f}ms {s_np * 1e3:>10.2f}ms"
        if kernels.NUMBA_AVAILABLE:
            f_nb, s_nb = time_backend(ab, rhs, True, args.repeats)
            speedup = (f_np + s_np) / (f_nb + s_nb)
            line += f" | {f_nb * 1e3:>11.2f}ms {s_nb * 1e3:>10.2f}ms | {speedup:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
