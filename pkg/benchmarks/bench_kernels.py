"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 200 1000 4000] [--repeat 5]

Both implementations are imported directly, so the env flag does not
matter here. Results are also checked for agreement.
"""

import argparse
import time

import numpy as np

from routerev import kernels as K


def walk(n, rng):
    steps = rng.normal(0.0, 4e-5, (n, 2))
    return np.cumsum(steps, axis=0) + [43.65, -79.38]


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 1000, 4000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    K.hausdorff_numba(walk(4, rng), walk(4, rng))
    K.frechet_numba(walk(4, rng), walk(4, rng))
    K.edit_numba(walk(4, rng), walk(4, rng), 20.0)
    print(f"numba compile/cache load: {time.perf_counter() - t0:.2f}s")

    pairs = {
        "hausdorff": (K.hausdorff_numba, K.hausdorff_numpy),
        "frechet": (K.frechet_numba, K.frechet_numpy),
        "edit": (lambda a, b: K.edit_numba(a, b, 20.0), lambda a, b: K.edit_numpy(a, b, 20.0)),
    }
    print(f"{'kernel':10} {'n':>6} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}  agree")
    for n in args.sizes:
        a, b = walk(n, rng), walk(n, rng)
        for name, (fast, slow) in pairs.items():
            tf, rf = best_of(lambda: fast(a, b), args.repeat)
            ts, rs = best_of(lambda: slow(a, b), args.repeat)
            agree = abs(rf - rs) <= 1e-9 * max(1.0, abs(rs))
            print(f"{name:10} {n:6d} {tf * 1e3:10.2f} {ts * 1e3:10.2f} {ts / tf:8.1f}x  {agree}")


if __name__ == "__main__":
    main()
