"""Time the compiled kernels against their NumPy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

The first compiled call (JIT compilation) is excluded from the timings.
"""
import argparse
import math
import timeit

import numpy as np

from two_end_lab import _kernels


def cases():
    rng = np.random.default_rng(0)
    u = rng.uniform(-1.0, 1.0, (601, 601))
    v = rng.normal(size=(601, 601))
    dopri = (0.0, math.log(1e4), 2.0, 0.2, 6 * math.sqrt(2), 0.0, 1e-10, 1e-12, 0.5, 50_000)
    return [
        ("allen_cahn_operator 601x601",
         lambda: _kernels.allen_cahn_operator_numpy(u, 0.1, 0.1),
         lambda: _kernels.allen_cahn_operator_jit(u, 0.1, 0.1)),
        ("column_crossings 601x601",
         lambda: _kernels.column_crossings_numpy(v, 0.1),
         lambda: _kernels.column_crossings_jit(v, 0.1)),
        ("dopri_flux r in [1, 1e4]",
         lambda: _kernels.dopri_flux(*dopri, jit=False),
         lambda: _kernels.dopri_flux(*dopri, jit=True)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _kernels.USE_JIT:
        print("numba unavailable or TWO_END_LAB_JIT=0; both columns run NumPy")
    print(f"{'kernel':32s} {'numpy [ms]':>12s} {'jit [ms]':>10s} {'speedup':>8s}")
    for name, slow, fast in cases():
        fast()  # compile
        t_np = min(timeit.repeat(slow, number=1, repeat=args.repeat)) * 1e3
        t_jit = min(timeit.repeat(fast, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:32s} {t_np:12.2f} {t_jit:10.2f} {t_np / t_jit:8.1f}")


if __name__ == "__main__":
    main()
