#!/usr/bin/env python3
"""Times the numba kernels against their numpy/scipy twins.

Usage: python3 benchmarks/bench_kernels.py [N]

N is the element count (default 2_000_000). The numba path is warmed up
before timing so compilation is not measured. Run with DAQWEAR_NO_NUMBA=1
to confirm the fallback selection (the numba column then reports n/a).
"""

import sys
import time

import numpy as np

from daqwear import kernels


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2_000_000
    rng = np.random.default_rng(0)
    lat1 = rng.uniform(-80, 80, n)
    lon1 = rng.uniform(-179, 179, n)
    lat2 = lat1 + rng.uniform(-0.01, 0.01, n)
    lon2 = lon1 + rng.uniform(-0.01, 0.01, n)
    accel = rng.normal(0.0, 0.03, (n, 3)) + np.array([0.0, 0.0, 9.81])
    t = rng.uniform(0.0, 120.0, n)

    cases = [
        ("haversine_m", kernels.haversine_m_np, (lat1, lon1, lat2, lon2),
         getattr(kernels, "haversine_m_nb", None)),
        ("lowpass_gravity", kernels.lowpass_gravity_np, (accel, 0.9),
         getattr(kernels, "lowpass_gravity_nb", None)),
        ("spin_motion", kernels.spin_motion_np, (t, 360.0, 10.0, 0.02, 9.81),
         getattr(kernels, "spin_motion_nb", None)),
    ]

    print(f"backend selected at import: {'numba' if kernels.NUMBA_ENABLED else 'numpy'}")
    print(f"{'kernel':<18} {'numpy':>10} {'numba':>10} {'speedup':>8}   (best of 5, n={n:,})")
    for name, np_fn, args, nb_fn in cases:
        t_np = timeit(np_fn, *args)
        if nb_fn is None:
            print(f"{name:<18} {t_np * 1e3:>8.1f}ms {'n/a':>10} {'':>8}")
            continue
        nb_fn(*args)  # warm-up / JIT
        t_nb = timeit(nb_fn, *args)
        print(f"{name:<18} {t_np * 1e3:>8.1f}ms {t_nb * 1e3:>8.1f}ms {t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()
