"""Packed GF(2) row reduction: numba kernel vs numpy fallback.

Both kernels are imported from the same module, so this compares them on
identical inputs in one process. Usage: python benchmarks/bench_rref.py [--sizes 64 256 1024]
"""
import argparse
import time

import numpy as np

from stabmod import linalg2 as la
from stabmod._accel import USE_NUMBA, njit, opts


def bench(fn, data, ncols, reps):
    best = float("inf")
    for _ in range(reps):
        work = data.copy()
        t = time.perf_counter()
        r, _ = fn(work, ncols)
        best = min(best, time.perf_counter() - t)
    return best, r


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sizes", type=int, nargs="+", default=[64, 256, 1024])
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    jit = njit(**opts())(la._rref_loops) if USE_NUMBA else None
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>6} {'numpy (s)':>12} {'numba (s)':>12} {'speedup':>8}")
    for n in args.sizes:
        data = la.pack(rng.integers(0, 2, size=(n, n), dtype=np.uint8))
        t_np, r_np = bench(la._rref_numpy, data, n, args.reps)
        if jit is None:
            print(f"{n:>6} {t_np:>12.5f} {'-':>12} {'-':>8}")
            continue
        jit(data[:2].copy(), n)  # compile outside the timing
        t_nb, r_nb = bench(jit, data, n, args.reps)
        assert r_np == r_nb, "kernels disagree on rank"
        print(f"{n:>6} {t_np:>12.5f} {t_nb:>12.5f} {t_np / t_nb:>8.1f}")


if __name__ == "__main__":
    main()
