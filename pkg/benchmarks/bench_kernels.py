"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

The first numba call compiles (or loads the on-disk cache); it is timed
separately and excluded from the steady-state numbers.
"""

import argparse
import time

import numpy as np

from copula_ccvar import _accel, _kernels


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    u = rng.random((1360, 7))
    w = rng.random((10_000, 7))
    eps = rng.standard_normal(1000)
    z = rng.standard_normal(21_000)
    sim = (0.02, 0.05, 0.05, 0.08, 0.9, 0.0, 0.0, 1.0)
    return {
        "empirical copula (1360 x 7 panel, 1e4 lattice points)": (
            lambda: _kernels._ecop_numba(u, w), lambda: _kernels._ecop_numpy(u, w)),
        "GARCH variance filter (1000 steps)": (
            lambda: _kernels._garch_var_numba(eps, 0.05, 0.08, 0.9, 1.0),
            lambda: _kernels._garch_var_numpy(eps, 0.05, 0.08, 0.9, 1.0)),
        "AR-GARCH simulation (21000 steps)": (
            lambda: _kernels._ar_garch_sim_numba(z, *sim), lambda: _kernels._ar_garch_sim_python(z, *sim)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _accel.numba is None:
        print("numba is not installed; only the numpy paths exist")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':56s} {'compile':>9s} {'numba':>10s} {'numpy':>10s} {'speed-up':>9s}")
    for name, (fast, slow) in cases(rng).items():
        t0 = time.perf_counter()
        fast()
        compile_s = time.perf_counter() - t0
        tf, ts = _best(fast, args.repeat), _best(slow, args.repeat)
        print(f"{name:56s} {compile_s:8.3f}s {tf * 1e3:8.3f}ms {ts * 1e3:8.3f}ms {ts / tf:8.1f}x")


if __name__ == "__main__":
    main()
