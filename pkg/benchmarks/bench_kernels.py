#!/usr/bin/env python3
"""Benchmark the numba training kernel against the pure-numpy fallback.

Times the fused minibatch-Adam epoch at corpus-realistic shapes (a few
hundred tables, TF-IDF-sized inputs, 500 hidden units) plus a small and a
wide variant, and reports per-epoch wall time and speedup.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats 5]

Selecting a backend at run time (affects the toolkit, not this script,
which always times both): TABCLS_NUMBA=0 forces the numpy path.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tabcls import kernels

SHAPES = [
    # (name, n samples, input dim, hidden, classes, batch)
    ("corpus-like", 212, 8000, 500, 27, 32),
    ("small-dense", 212, 600, 500, 27, 32),
    ("toy", 120, 64, 64, 4, 32),
]


def make_problem(n: int, d: int, k: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = np.zeros((n, d))
    y = rng.integers(0, k, size=n).astype(np.int64)
    nnz = max(4, min(d // 4, 60))
    for i in range(n):
        idx = rng.choice(d, size=nnz, replace=False)
        X[i, idx] = rng.random(nnz)
        X[i] /= np.linalg.norm(X[i])
    return X, y


def time_epoch(epoch_fn, X, y, hidden: int, batch: int, repeats: int) -> float:
    n, d = X.shape
    k = int(y.max()) + 1
    rng = np.random.default_rng(1)
    lim1 = np.sqrt(6.0 / (d + hidden))
    lim2 = np.sqrt(6.0 / (hidden + k))
    w1 = np.ascontiguousarray(rng.uniform(-lim1, lim1, size=(hidden, d)).T)
    b1 = np.zeros(hidden)
    w2 = np.ascontiguousarray(rng.uniform(-lim2, lim2, size=(k, hidden)).T)
    b2 = np.zeros(k)
    moments = [np.zeros_like(a) for a in (w1, b1, w2, b2, w1, b1, w2, b2)]
    order = rng.permutation(n)
    t = 0
    _, t = epoch_fn(w1, b1, w2, b2, *moments, X, y, order, batch, t,
                    1e-3, 0.9, 0.999, 1e-8)  # warm-up / JIT compile
    start = time.perf_counter()
    for _ in range(repeats):
        _, t = epoch_fn(w1, b1, w2, b2, *moments, X, y, order, batch, t,
                        1e-3, 0.9, 0.999, 1e-8)
    return (time.perf_counter() - start) / repeats


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if not kernels.HAVE_NUMBA:
        print("numba is not importable; only the numpy path can be timed")

    print(f"{'shape':<12} {'n':>5} {'dim':>6} {'numpy ms':>9} {'numba ms':>9} {'speedup':>8}")
    for name, n, d, hidden, k, batch in SHAPES:
        X, y = make_problem(n, d, k)
        numpy_ms = time_epoch(kernels.mlp_adam_epoch_numpy, X, y, hidden, batch,
                              args.repeats) * 1000
        if kernels.HAVE_NUMBA:
            numba_ms = time_epoch(kernels.mlp_adam_epoch_numba, X, y, hidden, batch,
                                  args.repeats) * 1000
            print(f"{name:<12} {n:>5} {d:>6} {numpy_ms:>9.1f} {numba_ms:>9.1f} "
                  f"{numpy_ms / numba_ms:>7.2f}x")
        else:
            print(f"{name:<12} {n:>5} {d:>6} {numpy_ms:>9.1f} {'-':>9} {'-':>8}")


if __name__ == "__main__":
    main()
