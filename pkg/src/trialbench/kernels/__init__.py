"""Kernel backend selection.

The hot inner loops (pairwise distances, histogram accumulation, split
scanning, SMO) live in a compiled extension when one was built, with a
pure-numpy twin as fallback. Both produce bit-identical results; set
TRIALBENCH_PURE=1 to force the fallback, e.g. for the benchmark in
benchmarks/bench_kernels.py.
"""

import os

from trialbench.kernels import _ref

if os.environ.get("TRIALBENCH_PURE"):
    _impl = _ref
else:
    try:
        from trialbench.kernels import _fast as _impl
    except ImportError:
        _impl = _ref

BACKEND = _impl.NAME

pairwise_sq_dists = _impl.pairwise_sq_dists
build_histograms = _impl.build_histograms
best_split = _impl.best_split
smo_solve = _impl.smo_solve

__all__ = ["BACKEND", "pairwise_sq_dists", "build_histograms", "best_split",
           "smo_solve"]
