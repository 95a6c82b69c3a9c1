"""Compare the numba and numpy kernels on the two hot loops.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is warmed up once (numba compiles on first call), then the best
of ``--repeat`` wall-clock runs is reported.
"""

import argparse
import time

import numpy as np

from petzlyap import _kernels_numba, _kernels_numpy
from petzlyap.cat import CatReservoirParams, generator_from_params
from petzlyap.ensembles import random_hermitian
from petzlyap.states import maximally_mixed

BACKENDS = {"numba": _kernels_numba, "numpy": _kernels_numpy}


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_jacobi(dims, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for d in dims:
        a = np.ascontiguousarray(random_hermitian(d, rng))
        tol = 1e-13 * np.linalg.norm(a)
        row = [f"jacobi d={d}"]
        for mod in BACKENDS.values():
            row.append(best_of(lambda: mod.jacobi_eigh(a, tol, 100), repeat))
        rows.append(row)
    return rows


def bench_rk4(nmaxes, steps, repeat):
    rows = []
    for nmax in nmaxes:
        gen = generator_from_params(CatReservoirParams(nmax=nmax))
        k, jumps = gen.effective(), gen.stacked_jumps()
        rho = np.ascontiguousarray(maximally_mixed(nmax + 1))
        empty = np.zeros((0, nmax + 1), dtype=np.complex128)
        row = [f"rk4 d={nmax + 1} x{steps}"]
        for mod in BACKENDS.values():
            row.append(best_of(lambda: mod.rk4_advance(rho.copy(), empty, k, jumps, 1e-3, steps, 1e-6), repeat))
        rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--steps", type=int, default=1000)
    args = ap.parse_args()
    rows = bench_jacobi((8, 16, 31, 64), args.repeat) + bench_rk4((10, 30), args.steps, args.repeat)
    print(f"{'case':<22}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, tn, tp in rows:
        print(f"{name:<22}{1e3 * tn:>12.3f}{1e3 * tp:>12.3f}{tp / tn:>10.1f}")


if __name__ == "__main__":
    main()
