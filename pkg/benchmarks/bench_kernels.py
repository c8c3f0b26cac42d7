"""Time the compiled and numpy kernel backends on representative workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Workloads mirror the library's hot paths: binning compound-Poisson jumps onto
a time grid, and the exact OU affine recursion on small and moderate state
dimensions. Each backend runs on identical inputs; the outputs are compared
before timing is reported.
"""
import argparse
import timeit

import numpy as np

from cyllevy import kernels


def jump_workload(n_paths, n_times, rate, dim, rng):
    counts = rng.poisson(rate, n_paths)
    path_idx = np.repeat(np.arange(n_paths), counts)
    time_idx = rng.integers(0, n_times, len(path_idx))
    sizes = rng.standard_normal((len(path_idx), dim)) if dim > 1 else rng.standard_normal(len(path_idx))
    return (lambda b: kernels.jump_sums(path_idx, time_idx, sizes, n_paths, n_times, backend=b)), len(path_idx)


def recursion_workload(n_paths, n_steps, dim, rng):
    A = -np.eye(dim) + 0.1 * rng.standard_normal((dim, dim))
    E = np.broadcast_to(np.eye(dim) + 0.01 * A, (n_steps, dim, dim))
    xi = 0.1 * rng.standard_normal((n_paths, n_steps, dim))
    y0 = rng.standard_normal((n_paths, dim))
    record = np.arange(0, n_steps + 1, max(1, n_steps // 10))
    return lambda b: kernels.affine_recursion(E, xi, y0, record, backend=b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="multiplies the number of paths")
    args = ap.parse_args(argv)
    try:
        kernels.get_backend("cython")
    except ImportError:
        print("compiled backend unavailable; build with `pip install -e . --no-build-isolation`")
        return 1

    rng = np.random.default_rng(0)
    n = lambda k: max(1, int(k * args.scale))
    cases = []
    fn, m = jump_workload(n(100_000), 101, 3.0, 1, rng)
    cases.append((f"jump_sums scalar ({m} jumps, 101 times)", fn))
    fn, m = jump_workload(n(20_000), 51, 5.0, 4, rng)
    cases.append((f"jump_sums dim 4 ({m} jumps, 51 times)", fn))
    cases.append(("affine_recursion dim 1 (100 steps)", recursion_workload(n(100_000), 100, 1, rng)))
    cases.append(("affine_recursion dim 4 (200 steps)", recursion_workload(n(20_000), 200, 4, rng)))
    cases.append(("affine_recursion dim 16 (50 steps)", recursion_workload(n(5_000), 50, 16, rng)))

    print(f"{'workload':48s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases:
        a, b = fn("python"), fn("cython")
        err = float(np.max(np.abs(a - b))) if a.size else 0.0
        if err > 1e-9 * max(1.0, float(np.max(np.abs(a)))):
            raise SystemExit(f"{name}: backends disagree by {err:.3e}")
        tp = min(timeit.repeat(lambda: fn("python"), number=1, repeat=args.repeat)) * 1e3
        tc = min(timeit.repeat(lambda: fn("cython"), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:48s} {tp:12.2f} {tc:12.2f} {tp / tc:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
