"""Timing comparison of the compiled and pure-numpy kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from hdrsampling.kernels import _pykernels
from hdrsampling.surrogate.basis import total_degree_indices

try:
    from hdrsampling.kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(rng):
    z300 = rng.standard_normal((300, 4))
    zval = rng.standard_normal((20_000, 4))
    theta = np.array([0.7, 1.3, 2.0, 0.9])
    idx = total_degree_indices(4, 8)
    return [
        ("matern52 300x300 (training)", "matern52", (z300, z300, theta)),
        ("matern52_sym 300 (training)", "matern52_sym", (z300, theta)),
        ("matern52 20000x300 (prediction)", "matern52", (zval, z300, theta)),
        ("hermite_table 20000x4 deg 12", "hermite_table", (zval, 12)),
        (f"psi_matrix 20000 x {len(idx)} terms", "psi_matrix", (zval, idx)),
    ]


def best_time(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    opts = ap.parse_args()
    rng = np.random.default_rng(opts.seed)
    print(f"{'kernel':40s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speed-up':>9s}")
    for label, name, args in cases(rng):
        t_py = best_time(getattr(_pykernels, name), args, opts.repeat)
        if _ckernels is None:
            print(f"{label:40s} {1e3 * t_py:12.2f} {'n/a':>12s} {'':>9s}")
            continue
        ref = getattr(_pykernels, name)(*args)
        got = getattr(_ckernels, name)(*args)
        diff = float(np.max(np.abs(ref - got)))
        t_c = best_time(getattr(_ckernels, name), args, opts.repeat)
        print(f"{label:40s} {1e3 * t_py:12.2f} {1e3 * t_c:12.2f} {t_py / t_c:8.1f}x"
              f"   max|diff|={diff:.1e}")


if __name__ == "__main__":
    main()
