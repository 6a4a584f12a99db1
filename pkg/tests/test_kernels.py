import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hplab import _kernels as K
from hplab.solver import RadialGrid

pytestmark = pytest.mark.skipif(K.compiled_backend is None, reason="compiled backend not built")

C, P = K.compiled_backend, K.python_backend


def _grid(I):
    g = RadialGrid(0.1, 6.0, I)
    return g.sm, g.sp, g.inv


sizes = st.integers(8, 120)
seeds = st.integers(0, 2**32 - 1)


@given(sizes, seeds, st.sampled_from([1.5, 2.0, 3.0]), st.sampled_from([K.POROUS, K.QUASILINEAR]))
def test_rhs_parity(I, seed, n, kind):
    sm, sp, inv = _grid(I)
    u = np.random.default_rng(seed).uniform(0.1, 2.0, I)
    a = C.rhs(kind, u, n, 0.0, sm, sp, inv, np.empty(I))
    b = P.rhs(kind, u, n, 0.0, sm, sp, inv, np.empty(I))
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12 * np.max(np.abs(b)))


@given(sizes, seeds, st.sampled_from([2.0, 2.5]), st.sampled_from([K.POROUS, K.QUASILINEAR]))
def test_rk4_parity(I, seed, n, kind):
    sm, sp, inv = _grid(I)
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.5, 1.5, I)
    bc = rng.uniform(0.5, 1.5, (3, 2))
    dt = 1e-6
    a = C.rk4_step(kind, u, n, 0.0, dt, bc, sm, sp, inv)
    b = P.rk4_step(kind, u, n, 0.0, dt, bc, sm, sp, inv)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)
    assert a[0] == bc[2, 0] and a[-1] == bc[2, 1]


@given(st.integers(2, 60), st.integers(1, 30), seeds, st.integers(0, 1))
def test_l1_memory_parity(m, I, seed, j0):
    rng = np.random.default_rng(seed)
    b = rng.uniform(0, 1, m)
    hist = rng.normal(size=(m + 1, I))
    a = C.l1_memory(b, hist, m, j0, np.zeros(I))
    c = P.l1_memory(b, hist, m, j0, np.zeros(I))
    np.testing.assert_allclose(a, c, rtol=1e-12, atol=1e-12)


@given(st.integers(3, 200), seeds)
def test_tridiag_parity(I, seed):
    rng = np.random.default_rng(seed)
    lo, up = rng.uniform(-1, 0, I), rng.uniform(-1, 0, I)
    lo[0] = up[-1] = 0.0
    di = 2.5 + rng.uniform(0, 1, I)  # diagonally dominant
    r = rng.normal(size=I)
    x = C.tridiag_solve(lo, di, up, r)
    np.testing.assert_allclose(x, P.tridiag_solve(lo, di, up, r), rtol=1e-12, atol=1e-13)
    resid = di * x
    resid[1:] += lo[1:] * x[:-1]
    resid[:-1] += up[:-1] * x[1:]
    np.testing.assert_allclose(resid, r, atol=1e-12)


def test_dispatch_routes_complex_to_python():
    sm, sp, inv = _grid(20)
    u = np.ones(20, dtype=complex) * (1 + 1j)
    out = K.laplacian(u, sm, sp, inv)
    assert out.dtype == complex and np.allclose(out, 0)


def test_env_var_forces_fallback():
    code = "import hplab._kernels as K; print(K.BACKEND)"
    env = dict(os.environ, HPLAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env.pop("HPLAB_PURE_PYTHON")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "cython"


def test_solver_results_agree_across_backends():
    code = (
        "import numpy as np; from hplab import solutions as S, solver as SV;"
        "p = SV.EvolutionProblem(S.build_family('theorem21-classical'), SV.RadialGrid(I=60));"
        "print(repr(SV.run(p, SV.RunSpec(0.5, 'rk4')).linf))"
    )
    vals = []
    for flag in ("1", "0"):
        env = dict(os.environ, HPLAB_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(float(out.stdout))
    assert vals[0] == pytest.approx(vals[1], rel=1e-10)
