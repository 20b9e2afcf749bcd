#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the pure-numpy fallback.

Runs each kernel under both backends on identical inputs, reports
wall-clock times and the speedup, and verifies the outputs agree
bit for bit (the fallback mirrors the extension's accumulation order).

Usage: python benchmarks/bench_kernels.py [--n 600] [--d 40] [--repeat 3]
"""

import argparse
import time

import numpy as np

from trialbench.kernels import _ref

try:
    from trialbench.kernels import _fast
except ImportError:
    _fast = None


def timeit(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def compare(name, ref_out, fast_out):
    def flat(x):
        return x if isinstance(x, (tuple, list)) else (x,)
    for a, b in zip(flat(ref_out), flat(fast_out)):
        a = np.asarray(a)
        b = np.asarray(b)
        if a.shape != b.shape or not (a == b).all():
            raise AssertionError(f"{name}: backends disagree")
    return "bit-exact"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=600)
    parser.add_argument("--d", type=int, default=40)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if _fast is None:
        print("compiled extension not available; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    n, d = args.n, args.d
    X = rng.normal(size=(n, d))
    y = np.where(rng.random(n) < 0.35, 1.0, -1.0)
    codes = rng.integers(0, 64, size=(n, d)).astype(np.uint8)
    rows = np.arange(n, dtype=np.int64)
    grad = rng.normal(size=n)
    hess = rng.random(n)
    K = np.exp(-pairwise_ref_cache(X) / d)

    cases = [
        ("pairwise_sq_dists",
         lambda m: m.pairwise_sq_dists(X, X)),
        ("build_histograms",
         lambda m: m.build_histograms(codes, rows, grad, hess, 64)),
        ("best_split",
         lambda m: m.best_split(*_ref.build_histograms(codes, rows, grad,
                                                       hess, 64), 1.0)),
        ("smo_solve",
         lambda m: m.smo_solve(K, y, 1.0, 1e-3, 10000)),
    ]
    print(f"n={n} d={d} repeat={args.repeat}")
    print(f"{'kernel':20s} {'python':>10s} {'cython':>10s} {'speedup':>8s}  agreement")
    for name, call in cases:
        t_ref, out_ref = timeit(lambda: call(_ref), args.repeat)
        t_fast, out_fast = timeit(lambda: call(_fast), args.repeat)
        status = compare(name, out_ref, out_fast)
        print(f"{name:20s} {t_ref*1e3:9.1f}ms {t_fast*1e3:9.1f}ms "
              f"{t_ref/t_fast:7.1f}x  {status}")
    return 0


_pairwise_cache = {}


def pairwise_ref_cache(X):
    key = id(X)
    if key not in _pairwise_cache:
        _pairwise_cache[key] = _ref.pairwise_sq_dists(X, X)
    return _pairwise_cache[key]


if __name__ == "__main__":
    raise SystemExit(main())
