"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each row is the best of N runs. The end-to-end rows swap the backend under
the search module, so they measure the whole search, not only the kernel.
"""
import argparse
import time
from contextlib import contextmanager

import numpy as np

from netfactor import _kernels_py, kernels
from netfactor.network import canonical_instance
from netfactor.search import SearchConfig, als_search, square_cross_reduced_search
from netfactor.tasks import typewriter_task
from netfactor.tensor import Domain

try:
    from netfactor import _kernels as compiled
except ImportError:
    compiled = None

NAMES = ("nnls_gram", "square_objective", "square_descent", "max_fooling_clique", "accumulate")


@contextmanager
def backend(mod):
    saved = {n: getattr(kernels, n) for n in NAMES}
    for n in NAMES:
        setattr(kernels, n, getattr(mod, n))
    try:
        yield
    finally:
        for n, f in saved.items():
            setattr(kernels, n, f)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    A = rng.random((64, 24))
    b = rng.standard_normal(64)
    G, h = A.T @ A, A.T @ b
    z0 = rng.standard_normal(15) + 1j * rng.standard_normal(15)
    compat = [int(rng.integers(0, 2**40)) for _ in range(40)]
    gidx = rng.integers(0, 200, size=(4, 200_000)).astype(np.int64)
    out_idx = rng.integers(0, 64, size=200_000).astype(np.int64)
    x = rng.standard_normal(200)
    net = canonical_instance("single-edge", d=3, client_dim=4)
    return {
        "nnls_gram 24 vars x200": lambda k: [k.nnls_gram(G, h) for _ in range(200)],
        "square_objective x2000": lambda k: [k.square_objective(z0) for _ in range(2000)],
        "square_descent 2000 steps": lambda k: k.square_descent(z0, 2000, 0.0),
        "max_fooling_clique 40 vertices": lambda k: k.max_fooling_clique(compat, 40),
        "accumulate 200k configs x20": lambda k: [k.accumulate(gidx, x, -1, out_idx, 64) for _ in range(20)],
        "ALS typewriter nonneg, 20 restarts": lambda k: _with(k, lambda: als_search(
            net, typewriter_task(), Domain.NONNEG, SearchConfig(restarts=20))),
        "reduced square search, 10 restarts": lambda k: _with(k, lambda: square_cross_reduced_search(
            SearchConfig(restarts=10, max_sweeps=500))),
    }


def _with(mod, fn):
    with backend(mod):
        return fn()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        print("compiled extension not built; only the Python backend can be timed")
    print(f"{'case':40s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}")
    for name, fn in cases().items():
        tp = best_of(lambda: fn(_kernels_py), args.repeat)
        if compiled is None:
            print(f"{name:40s} {tp:10.4f} {'-':>11s} {'-':>8s}")
            continue
        tc = best_of(lambda: fn(compiled), args.repeat)
        print(f"{name:40s} {tp:10.4f} {tc:11.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
