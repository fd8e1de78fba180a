"""Wall-clock comparison of the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py --paths 200000 --repeat 3
"""

import argparse
import math
import time

import numpy as np

from fxip import _pykernels

try:
    from fxip import _kernels
except ImportError:
    _kernels = None


def heston_case(n_paths, n_steps=20):
    k = np.arange(n_steps, dtype=np.float64)
    emr = np.full(n_steps, math.exp(-1.5 * 0.05))
    return (0.0086, -0.2 + 0.001 * k, 0.2 + 0.001 * k, 0.45, emr, np.full(n_steps, 0.03),
            np.full(n_steps, 0.02), np.full(n_steps, 4e-4), 0.05, n_paths, 1, True)


def sabr_case(n_paths, n_steps=20):
    return (0.1, 0.5, -0.3, -0.00125, 0.00125, 0.05, n_steps, n_paths, 1, True)


def bvn_case(n):
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-4, 4, (2, n))
    return x, y, rng.uniform(-0.99, 0.99, n)


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--bvn", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=0, help="0 uses all cores")
    args = ap.parse_args()
    cases = [("heston_qt_paths", heston_case(args.paths)),
             ("sabr_qx_paths", sabr_case(args.paths)),
             ("bvn_cdf", bvn_case(args.bvn))]
    print(f"{'kernel':<18}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, a in cases:
        tp = best_of(getattr(_pykernels, name), a, args.repeat)
        if _kernels is None:
            print(f"{name:<18}{tp:>12.3f}{'n/a':>12}{'':>10}")
            continue
        tc = best_of(getattr(_kernels, name), (*a, args.threads), args.repeat)
        print(f"{name:<18}{tp:>12.3f}{tc:>12.3f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
