"""Compare the numba and pure-numpy singular-value scan kernels.

    python3 benchmarks/bench_kernels.py --rows 12 --cols 10 --orders 2,3,4,5

Both kernels run on the same submatrix enumeration; the script reports the
best-of-N wall time per order, the speed-up, and the largest disagreement
between the two paths.
"""
import argparse
import time

import numpy as np

from gainbin import numerics
from gainbin.numerics import batch_singular_values, index_sets


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=12)
    ap.add_argument("--cols", type=int, default=10)
    ap.add_argument("--orders", default="2,3,4,5")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    values = rng.uniform(-1, 1, size=(args.rows, args.cols))
    values[rng.random(values.shape) < 0.2] = 0.0

    if not numerics.HAVE_NUMBA:
        print("numba unavailable (or GAINBIN_DISABLE_JIT set); timing the numpy path only")
    else:
        # compile (or load from cache) outside the timed region
        batch_singular_values(values[:3, :3], index_sets(3, 2), index_sets(3, 2), use_jit=True)

    print(f"{args.rows}x{args.cols} matrix, best of {args.repeat}")
    print(f"{'k':>2} {'submatrices':>12} {'numpy s':>10} {'numba s':>10} {'speed-up':>9} {'max diff':>9}")
    for k in (int(x) for x in args.orders.split(",")):
        rows, cols = index_sets(args.rows, k), index_sets(args.cols, k)
        n = len(rows) * len(cols)
        t_np, sv_np = best_of(lambda: batch_singular_values(values, rows, cols, use_jit=False), args.repeat)
        if numerics.HAVE_NUMBA:
            t_nb, sv_nb = best_of(lambda: batch_singular_values(values, rows, cols, use_jit=True), args.repeat)
            diff = float(np.max(np.abs(sv_np - sv_nb))) if n else 0.0
            print(f"{k:>2} {n:>12} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>8.1f}x {diff:>9.1e}")
        else:
            print(f"{k:>2} {n:>12} {t_np:>10.4f} {'-':>10} {'-':>9} {'-':>9}")


if __name__ == "__main__":
    main()
