"""Numpy implementations of the hot kernels (any dtype, incl. complex).

Signatures mirror ``_ckernels``. Face factors are stored per node:
``sm[i] = sinh(eta_i - h/2)``, ``sp[i] = sinh(eta_i + h/2)`` and
``inv[i] = 1 / (sinh(eta_i) h^2)``. Boundary entries of every output are 0.
"""

import numpy as np
from scipy.linalg import solve_banded

POROUS, QUASILINEAR, FORCED = 0, 1, 2


def laplacian(w, sm, sp, inv, out):
    out[0] = 0.0
    out[-1] = 0.0
    out[1:-1] = inv[1:-1] * (sp[1:-1] * (w[2:] - w[1:-1]) - sm[1:-1] * (w[1:-1] - w[:-2]))
    return out


def rhs(kind, u, n, lam, sm, sp, inv, out):
    if kind == QUASILINEAR:
        laplacian(u, sm, sp, inv, out)
        out *= u
    else:
        laplacian(u**n, sm, sp, inv, out)
        if kind == POROUS:
            out[1:-1] -= u[1:-1]
        else:
            out[1:-1] += lam * u[1:-1]
    return out


def rk4_step(kind, u, n, lam, dt, bc, sm, sp, inv):
    k1 = np.empty_like(u)
    k2 = np.empty_like(u)
    k3 = np.empty_like(u)
    k4 = np.empty_like(u)
    rhs(kind, u, n, lam, sm, sp, inv, k1)
    stage = u + 0.5 * dt * k1
    stage[0], stage[-1] = bc[1, 0], bc[1, 1]
    rhs(kind, stage, n, lam, sm, sp, inv, k2)
    stage = u + 0.5 * dt * k2
    stage[0], stage[-1] = bc[1, 0], bc[1, 1]
    rhs(kind, stage, n, lam, sm, sp, inv, k3)
    stage = u + dt * k3
    stage[0], stage[-1] = bc[2, 0], bc[2, 1]
    rhs(kind, stage, n, lam, sm, sp, inv, k4)
    new = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    new[0], new[-1] = bc[2, 0], bc[2, 1]
    return new


def l1_memory(b, hist, m, j0, out):
    """``out += sum_{j=j0}^{m-1} b_j (hist[m-j] - hist[m-j-1])``."""
    if m - j0 <= 0:
        return out
    j = np.arange(j0, m)
    diffs = hist[m - j] - hist[m - j - 1]
    out += b[j0:m] @ diffs
    return out


def tridiag_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system; ``lower[0]`` and ``upper[-1]`` are ignored."""
    n = len(diag)
    ab = np.zeros((3, n), dtype=np.result_type(lower, diag, upper, rhs))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, rhs, check_finite=False)
