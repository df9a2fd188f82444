"""Compiled vs pure-Python kernel timings on Z^2 windows.

    python benchmarks/bench_kernels.py [--radii 50 100 200] [--repeat 3]
"""
import argparse
import time

import numpy as np

from coarse_scope import _pykernels, kernels
from coarse_scope.covers import brick_cover
from coarse_scope.windows import extract_window, sphere

try:
    from coarse_scope import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(W):
    w = extract_window("zn:2", None, W)
    o = w.index(w.base)
    blocked = w.mask(sphere(w, W // 2))
    c = brick_cover(w, 6)
    centers = np.arange(len(w), dtype=np.int32)
    vp_ptr, vp_idx = c.vertex_patches()
    return len(w), {
        "bfs": lambda impl: kernels.bfs(w.indptr, w.indices, [o], impl=impl),
        "bfs blocked": lambda impl: kernels.bfs(w.indptr, w.indices, [o], blocked=blocked,
                                                impl=impl),
        "components": lambda impl: kernels.components(w.indptr, w.indices, ~blocked, impl=impl),
        "ball_patch_counts R=2": lambda impl: kernels.ball_patch_counts(
            w.indptr, w.indices, centers, 2, vp_ptr, vp_idx, len(c), impl=impl),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radii", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback can be timed")
    print(f"{'kernel':<24}{'W':>6}{'vertices':>10}{'cython ms':>11}{'python ms':>11}{'speedup':>9}")
    for W in args.radii:
        n, fns = cases(W)
        for name, fn in fns.items():
            py = best_of(lambda: fn(_pykernels), args.repeat)
            if _kernels is None:
                print(f"{name:<24}{W:>6}{n:>10}{'-':>11}{py * 1e3:>11.3f}{'-':>9}")
                continue
            cy = best_of(lambda: fn(_kernels), args.repeat)
            print(f"{name:<24}{W:>6}{n:>10}{cy * 1e3:>11.3f}{py * 1e3:>11.3f}{py / cy:>8.1f}x")


if __name__ == "__main__":
    main()
