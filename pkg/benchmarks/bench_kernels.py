"""Compare the compiled and numpy kernels on representative workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from dimerdefect import kernels
from dimerdefect.capacitance import make_context
from dimerdefect.core import reference_dimer
from dimerdefect.greens import _lerch_coeffs


def workloads():
    theta = np.linspace(-3.1, 3.1, 4000)
    theta = theta[theta != 0]
    coeffs = _lerch_coeffs(0.5, 60)
    ctx = make_context(reference_dimer(), 199)
    c = ctx.Ccal
    args = [np.ascontiguousarray(x) for x in (c[:, 0, 0], c[:, 0, 1], c[:, 1, 0], c[:, 1, 1],
                                              ctx.eigenvalues[:, 0], ctx.eigenvalues[:, 1])]
    phase = np.ones(ctx.grid_size, dtype=complex)
    re, im = np.meshgrid(np.linspace(0, 2, 200), np.linspace(-1.5, 1.5, 200))
    w2 = ((re + 1j * im) ** 2).ravel()
    return {
        "lerch_phi1 (4000 thetas, 60 terms)": lambda m: m.lerch_phi1(theta, 0.5, coeffs),
        "kummer_remainder (2e5 terms)": lambda m: m.kummer_remainder(0.3, 0.01, 0.7, -100_000, 100_000),
        "bz_average (200x200 heatmap, 199 nodes)": lambda m: m.bz_average(*args, ctx.weights, phase, w2),
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    py = kernels.python_backend()
    if kernels.BACKEND != "cython":
        print("compiled kernels unavailable; only the numpy backend can be timed")
    print(f"{'workload':45s} {'numpy [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for name, fn in workloads().items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat)) * 1e3
        if kernels.BACKEND == "cython":
            t_c = min(timeit.repeat(lambda: fn(kernels), number=1, repeat=args.repeat)) * 1e3
            print(f"{name:45s} {t_py:12.2f} {t_c:14.2f} {t_py / t_c:8.1f}x")
        else:
            print(f"{name:45s} {t_py:12.2f} {'-':>14s} {'-':>8s}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
