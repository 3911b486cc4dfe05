"""Benchmark the numba kernels against their pure-numpy twins.

The backend flag (ANISONL_NUMBA) is read at import time, so this script
re-executes itself in a subprocess per backend and prints a comparison
table.  Run from the repository root:

    python benchmarks/bench_backends.py
"""

import json
import os
import subprocess
import sys
import time

import numpy as np


def _time(fn, *args, repeats=5):
    fn(*args)                     # warm-up (JIT compile)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_suite():
    from anisonl import _accel
    from anisonl.profile import isotropic
    from anisonl.kernels import KernelFamily, PowerLawKernel
    from anisonl.solver import AssembledOperator, DiscreteProblem

    rng = np.random.default_rng(0)
    out = {"numba": _accel.using_numba()}

    pts = rng.normal(size=(400_000, 2))
    expo = np.array([3.0, 3.5])
    out["gauge_400k"] = _time(_accel.gauge_many,
                              np.ascontiguousarray(pts), expo)

    lo = np.array([-2.0, -2.0])
    inv_h = np.array([16.0, 16.0])
    shape = np.array([65, 65], dtype=np.int64)
    vals = rng.normal(size=65 * 65)
    q = rng.uniform(-1.9, 1.9, size=(400_000, 2))
    out["interp_400k"] = _time(_accel.interp_many, np.ascontiguousarray(q),
                               lo, inv_h, shape, vals)

    prof = isotropic(1, 1.0, 1.0, 2.0)
    family = KernelFamily.extremal_pair(prof)
    prob = DiscreteProblem(prof, (-2.0,), (2.0,), (257,), family, 0.5,
                           window=256)
    op = AssembledOperator(prob)
    u = rng.normal(size=257)
    out["sweep_257x512"] = _time(lambda: op.apply(u))
    return out


def main():
    if os.environ.get("_ANISONL_BENCH_CHILD"):
        print(json.dumps(run_suite()))
        return
    rows = {}
    for flag in ("1", "0"):
        env = dict(os.environ, _ANISONL_BENCH_CHILD="1", ANISONL_NUMBA=flag)
        res = subprocess.run([sys.executable, __file__], env=env,
                             capture_output=True, text=True, check=True)
        rows[flag] = json.loads(res.stdout.strip().splitlines()[-1])
    keys = [k for k in rows["1"] if k != "numba"]
    print(f"{'kernel':<16}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>9}")
    for k in keys:
        a, b = rows["1"][k] * 1e3, rows["0"][k] * 1e3
        print(f"{k:<16}{a:>12.2f}{b:>12.2f}{b / a:>9.2f}")


if __name__ == "__main__":
    main()
