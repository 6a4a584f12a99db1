"""Compiled vs numpy kernels: per-call timings and end-to-end solver runs.

    python3 benchmarks/bench_kernels.py [--sizes 100,400,1600] [--repeat 5]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from hplab import _kernels as K
from hplab.solver import RadialGrid


def _cases(I: int, rng: np.random.Generator):
    g = RadialGrid(0.1, 8.0, I)
    u = 1.0 + rng.random(I)
    bc = np.ascontiguousarray(np.tile(u[[0, -1]], (3, 1)))
    m = 4 * I
    hist = rng.random((m + 1, I))
    b = rng.random(m)
    out = np.zeros(I)
    lo, up = -rng.random(I), -rng.random(I)
    diag = 4.0 + rng.random(I)
    rhs = rng.random(I)
    return {
        "rk4_step": lambda be: be.rk4_step(K.POROUS, u, 2.0, 0.0, 1e-5, bc, g.sm, g.sp, g.inv),
        f"l1_memory (m={m})": lambda be: be.l1_memory(b, hist, m, 1, out),
        "tridiag_solve": lambda be: be.tridiag_solve(lo, diag, up, rhs),
    }


def _best(fn, repeat: int) -> float:
    t = timeit.Timer(fn)
    n, _ = t.autorange()
    return min(t.repeat(repeat, n)) / n


def _solver_run(pure: bool) -> float:
    code = ("import time; from hplab import solver as SV, solutions as S;"
            "f=S.build_family('theorem21-classical', n=2.0, c1=-1.0, c2=0.1);"
            "p=SV.EvolutionProblem(f, SV.RadialGrid(0.1, 8.0, 200));"
            "t=time.perf_counter(); SV.run(p, SV.RunSpec(1.0, 'rk4')); print(time.perf_counter()-t)")
    env = {**os.environ, "HPLAB_PURE_PYTHON": "1" if pure else "0"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="100,400,1600")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-solver", action="store_true", help="skip the end-to-end run")
    args = ap.parse_args(argv)
    if K.compiled_backend is None:
        print("compiled backend not available; rebuild with a C compiler", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24}{'I':>6}{'cython [us]':>14}{'numpy [us]':>14}{'speedup':>10}")
    for I in (int(s) for s in args.sizes.split(",")):
        for name, call in _cases(I, rng).items():
            tc = _best(lambda: call(K.compiled_backend), args.repeat)
            tp = _best(lambda: call(K.python_backend), args.repeat)
            print(f"{name:<24}{I:>6}{tc * 1e6:>14.2f}{tp * 1e6:>14.2f}{tp / tc:>10.1f}")
    if not args.no_solver:
        tc, tp = _solver_run(False), _solver_run(True)
        print(f"\nporous-decay rk4, I=200, t=1: cython {tc:.2f} s, numpy {tp:.2f} s, speedup {tp / tc:.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
