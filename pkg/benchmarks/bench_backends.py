#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

Runs each kernel through both implementations directly (bypassing the
DST_NUMBA dispatch) so one process can compare them side by side.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dst import kernels  # noqa: E402
from dst.graph import complete_graph, cycle_graph, laplacian  # noqa: E402


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_jacobi(n, repeat):
    rng = np.random.Generator(np.random.Philox(5))
    A = rng.standard_normal((n, n))
    A = A + A.T
    tol = 1e-12 * np.sqrt(np.sum(A * A))

    def run_numpy():
        kernels._jacobi_numpy_impl(A.copy(), tol, 100)

    def run_numba():
        kernels._jacobi_jit(A.copy(), tol, 100)

    return run_numpy, run_numba


def bench_linear(n, steps, repeat):
    g = cycle_graph(n)
    ei, ej, ew = g.edge_arrays()
    L = laplacian(g)
    rng = np.random.Generator(np.random.Philox(6))
    R = 50.0 + np.cumsum(rng.standard_normal((steps + 1, n)), axis=0)
    X0 = np.full(n, 50.0)

    def run_numpy():
        X = np.empty((steps + 1, n))
        X[0] = X0
        kernels._run_linear_numpy_impl(X, R, L, 0.05, 1)

    def run_numba():
        X = np.empty((steps + 1, n))
        X[0] = X0
        kernels._run_linear_jit(X, R, ei, ej, ew, 0.05, 1)

    return run_numpy, run_numba


def bench_case4(n, steps, repeat):
    g = complete_graph(n, 0.3)
    ptr, nbr, wts = g.csr_adjacency()
    rng = np.random.Generator(np.random.Philox(7))
    R = np.tile(5.0 + 5.0 * rng.random(n), (steps + 1, 1))
    X0 = R[0] * rng.random(n)

    def run_numpy():
        X = np.empty((steps + 1, n))
        X[0] = X0
        kernels._run_case4_impl(X, R, ptr, nbr, wts, 0.02)

    def run_numba():
        X = np.empty((steps + 1, n))
        X[0] = X0
        kernels._run_case4_jit(X, R, ptr, nbr, wts, 0.02)

    return run_numpy, run_numba


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not kernels.HAS_NUMBA:
        print("numba unavailable; nothing to compare")
        return

    kernels.warm_up()
    cases = [
        ("jacobi eigh n=32", *bench_jacobi(32, args.repeat)),
        ("jacobi eigh n=96", *bench_jacobi(96, args.repeat)),
        ("case I loop n=12 x 200k", *bench_linear(12, 200_000, args.repeat)),
        ("case IV loop n=16 x 20k", *bench_case4(16, 20_000, args.repeat)),
    ]
    print(f"{'kernel':<28}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, run_np, run_nb in cases:
        run_nb()  # make sure specialization is compiled before timing
        t_np = timeit(run_np, args.repeat)
        t_nb = timeit(run_nb, args.repeat)
        print(f"{name:<28}{t_np:>11.4f}s{t_nb:>11.4f}s{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
