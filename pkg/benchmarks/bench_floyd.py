"""Time the shortest-path kernels: compiled vs numpy fallback, classic vs matrix form.

    python benchmarks/bench_floyd.py [--sizes 100,200,400] [--repeat 3] [--knn 10]

scipy's csgraph Floyd-Warshall is timed as an outside reference. Each run
also checks that all variants return the same matrix.
"""
import argparse
import time

import numpy as np
from scipy.sparse.csgraph import floyd_warshall as scipy_floyd

from nhkmr import _fallback
from nhkmr.metricspace import knn_graph, pairwise_distances

try:
    from nhkmr import _core
except ImportError:
    _core = None


def best_of(fn, adjacency, repeat):
    times = []
    for _ in range(repeat):
        d = np.ascontiguousarray(adjacency).copy()
        start = time.perf_counter()
        out = fn(d)
        times.append(time.perf_counter() - start)
    return min(times), (d if out is None else out)


def variants(n):
    all_idx = np.arange(n, dtype=np.intp)
    v = {
        "numpy classic": _fallback.floyd_warshall_inplace,
        "numpy matrix-form": lambda d: _fallback.relax_through_inplace(d, all_idx),
    }
    if _core is not None:
        v["cython classic"] = _core.floyd_warshall_inplace
        v["cython matrix-form"] = lambda d: _core.relax_through_inplace(d, all_idx)
    v["scipy csgraph"] = lambda d: scipy_floyd(np.where(np.isinf(d), 0.0, d), directed=False)
    return v


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,200,400,800")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--knn", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    if _core is None:
        print("compiled extension not available; timing numpy kernels only")
    print(f"{'n':>6} {'variant':<20} {'seconds':>10} {'vs numpy classic':>17}")
    for n in (int(s) for s in args.sizes.split(",")):
        pts = rng.normal(size=(n, 3))
        adjacency = knn_graph(pairwise_distances(pts), min(args.knn, n - 1)).adjacency
        base = None
        reference = None
        for name, fn in variants(n).items():
            seconds, result = best_of(fn, adjacency, args.repeat)
            if reference is None:
                reference = result
            elif not np.allclose(result, reference, rtol=1e-12, atol=0):
                raise SystemExit(f"{name} disagrees with numpy classic at n={n}")
            base = base or seconds
            print(f"{n:>6} {name:<20} {seconds:>10.4f} {base / seconds:>16.1f}x")


if __name__ == "__main__":
    main()
