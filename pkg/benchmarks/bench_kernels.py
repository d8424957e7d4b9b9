"""Timing comparison of the compiled and NumPy response kernels.

The two implementations share a contract (see nfisac._kernels_py); this
script times steering_matrix and steering_norm_sq on a realistic array
geometry over a range of point-batch sizes, checks that the outputs agree
to near machine precision, and reports the speedup of the compiled path.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --points 512 8192 --repeats 30
"""

import argparse
import time

import numpy as np

from nfisac import _kernels_py
from nfisac.geometry import make_ula

try:
    from nfisac import _kernels
except ImportError:
    _kernels = None


def _best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_case(elements, points, wavelength, repeats):
    rows = []
    for name, fn in (("steering_matrix",
                      lambda m: m.steering_matrix(elements, points,
                                                  wavelength)),
                     ("steering_norm_sq",
                      lambda m: m.steering_norm_sq(elements, points,
                                                   wavelength))):
        t_py = _best_of(lambda: fn(_kernels_py), repeats)
        if _kernels is None:
            rows.append((name, t_py, None, None))
            continue
        t_cy = _best_of(lambda: fn(_kernels), repeats)
        diff = float(np.max(np.abs(fn(_kernels) - fn(_kernels_py))))
        rows.append((name, t_py, t_cy, diff))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--elements", type=int, default=64,
                        help="array size (default 64)")
    parser.add_argument("--points", type=int, nargs="+",
                        default=[64, 1024, 16384],
                        help="point-batch sizes to time")
    parser.add_argument("--repeats", type=int, default=20,
                        help="repetitions per measurement (best-of)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    geom = make_ula(args.elements, 2.4e9, speed_of_light=3.0e8)
    rng = np.random.default_rng(args.seed)
    if _kernels is None:
        print("compiled extension not built; timing the NumPy path only")
    print(f"array: {geom.n} elements, wavelength {geom.wavelength:.4f} m")
    print(f"{'kernel':<18} {'points':>7} {'numpy':>10} {'compiled':>10} "
          f"{'speedup':>8} {'max|diff|':>10}")
    for n_points in args.points:
        points = np.column_stack([rng.uniform(-7.0, 7.0, n_points),
                                  rng.uniform(5.0, 25.0, n_points)])
        for name, t_py, t_cy, diff in bench_case(geom.elements, points,
                                                 geom.wavelength,
                                                 args.repeats):
            if t_cy is None:
                print(f"{name:<18} {n_points:>7} {t_py * 1e3:>9.3f}ms "
                      f"{'-':>10} {'-':>8} {'-':>10}")
            else:
                print(f"{name:<18} {n_points:>7} {t_py * 1e3:>9.3f}ms "
                      f"{t_cy * 1e3:>9.3f}ms {t_py / t_cy:>7.2f}x "
                      f"{diff:>10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
