"""Special functions used by the exact solutions.

Only the pieces needed on the real axis are provided: the one-parameter
Mittag-Leffler function ``E_beta(z)``, the Bessel-type series
``C_nu(t) = sum_k t^k / (k! (k+nu)!)`` (``C_0`` is the Laguerre-derivative
eigenfunction) and overflow-safe ``ln sinh`` / ``ln tanh(x/2)``.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy import integrate

__all__ = [
    "mittag_leffler",
    "ml_series",
    "ml_asymptotic",
    "ml_integral",
    "c0",
    "bessel_series",
    "bessel_series_terms",
    "log_sinh",
    "log_tanh_half",
]

# Largest series term tolerated on the negative axis; the rounding error of an
# alternating sum is about max_term * eps * sqrt(k).
_SERIES_MAX_TERM = 20.0
_ASYMPTOTIC_MIN_X = 20.0
_ASYMPTOTIC_TOL = 1e-17


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"Mittag-Leffler order must lie in (0, 1], got {beta}")
    return beta


def _series_log_terms(beta: float, x: float, kmax: int) -> np.ndarray:
    """``log |x^k / Gamma(beta k + 1)|`` for ``k < kmax``."""
    from scipy.special import gammaln

    k = np.arange(kmax, dtype=float)
    return k * math.log(x) - gammaln(beta * k + 1.0)


def ml_series(beta: float, z, tol: float = 1e-17, kmax: int = 4000):
    """Power series ``sum z^k / Gamma(beta k + 1)``.

    Accurate only while the terms stay small; see :func:`mittag_leffler`.
    """
    beta = _check_beta(beta)
    if z == 0:
        return 1.0 + 0.0 * z
    is_complex = isinstance(z, complex)
    log_z = cmath.log(z) if is_complex else math.log(abs(z))
    log_abs = math.log(abs(z))
    total = 0.0 * z
    peak_passed = False
    for k in range(kmax):
        lg = math.lgamma(beta * k + 1.0)
        if is_complex:
            term = cmath.exp(k * log_z - lg)
            mag = abs(term)
        else:
            mag = math.exp(k * log_z - lg)
            term = -mag if (z < 0 and k % 2) else mag
        total += term
        # terms grow until beta*k ~ |z|^(1/beta); only stop on the decaying side
        if not peak_passed and math.lgamma(beta * (k + 1) + 1.0) - lg > log_abs:
            peak_passed = True
        if peak_passed and mag <= tol * max(abs(total), 1e-300):
            return total
    raise ArithmeticError(f"Mittag-Leffler series did not converge for z={z}")


def ml_asymptotic(beta: float, x: float, kmax: int = 200):
    """Asymptotic expansion of ``E_beta(-x)`` for large ``x > 0``.

    ``E_beta(-x) ~ sum_{k>=1} (-1)^(k+1) x^(-k) / Gamma(1 - beta k)``, truncated
    at the smallest term. Returns ``(value, error_estimate)``.
    """
    from scipy.special import rgamma

    beta = _check_beta(beta)
    if x <= 0:
        raise ValueError("asymptotic expansion needs x > 0")
    total = 0.0
    prev = math.inf
    err = math.inf
    for k in range(1, kmax):
        term = (-1.0) ** (k + 1) * x ** (-k) * rgamma(1.0 - beta * k)
        size = abs(term)
        if size == 0.0:
            # 1/Gamma vanishes at nonpositive integers; skip exact zeros
            continue
        if size > prev:
            break
        total += term
        prev = size
        err = size
    return total, err


def ml_integral(beta: float, x: float) -> float:
    """``E_beta(-x)`` for ``x > 0`` and ``0 < beta < 1`` by quadrature.

    Uses ``E_beta(-x) = sin(beta pi)/(beta pi) * int_0^inf exp(-v^(1/beta)) x
    / (v^2 + 2 v x cos(beta pi) + x^2) dv``, whose integrand is smooth and
    super-exponentially decaying.
    """
    beta = _check_beta(beta)
    if beta == 1.0:
        raise ValueError("integral representation degenerates at beta=1")
    if x <= 0:
        raise ValueError("integral representation needs x > 0")
    s, c = math.sin(beta * math.pi), math.cos(beta * math.pi)
    inv_beta = 1.0 / beta

    def integrand(v):
        return math.exp(-(v**inv_beta)) * x / ((v + x * c) ** 2 + (x * s) ** 2)

    vmax = 745.0**beta
    points = sorted(p for p in (-x * c, 1.0) if 0.0 < p < vmax)
    val, abserr, *_ = integrate.quad(
        integrand, 0.0, vmax, points=points or None,
        epsabs=1e-15, epsrel=1e-13, limit=400, full_output=1,
    )
    if abserr > 1e-12:
        raise ArithmeticError(f"Mittag-Leffler quadrature inaccurate at beta={beta}, x={x}: {abserr:.2e}")
    return s / (beta * math.pi) * val


def _series_is_safe(beta: float, x: float) -> bool:
    if x == 0:
        return True
    return float(np.max(_series_log_terms(beta, x, kmax=_series_kmax(beta, x)))) <= math.log(_SERIES_MAX_TERM)


def _series_kmax(beta: float, x: float) -> int:
    # past the peak at beta*k ~ x^(1/beta)
    return int(min(4000, 2 * x ** (1.0 / beta) / beta + 50))


def mittag_leffler(beta: float, z):
    """One-parameter Mittag-Leffler function ``E_beta(z)``, ``0 < beta <= 1``.

    Real arguments are supported everywhere they are finite (accuracy ~1e-13 on
    the negative axis). Complex arguments are only accepted inside the radius
    where the power series is numerically safe; ``beta = 1`` is exactly
    ``exp``.
    """
    beta = _check_beta(beta)
    if isinstance(z, complex) and z.imag != 0.0:
        if not cmath.isfinite(z):
            raise ValueError(f"Mittag-Leffler argument must be finite, got {z}")
        if beta == 1.0:
            return cmath.exp(z)
        if not _series_is_safe(beta, abs(z)):
            raise ValueError(f"complex argument {z} outside the supported series range")
        return ml_series(beta, z)
    z = float(z.real if isinstance(z, complex) else z)
    if not math.isfinite(z):
        raise ValueError(f"Mittag-Leffler argument must be finite, got {z}")
    if beta == 1.0:
        return math.exp(z)
    if z >= 0.0:
        return ml_series(beta, z)
    x = -z
    if _series_is_safe(beta, x):
        return ml_series(beta, z)
    if x >= _ASYMPTOTIC_MIN_X:
        val, err = ml_asymptotic(beta, x)
        if err <= _ASYMPTOTIC_TOL:
            return val
    return ml_integral(beta, x)


def bessel_series_terms(t: float, nu: int = 0, rtol: float = 1e-16, min_terms: int = 5) -> int:
    """Number of terms the adaptive ``C_nu`` summation uses at ``t``."""
    term = 1.0 / math.factorial(nu)
    total = term
    k = 0
    while True:
        k += 1
        term *= t / (k * (k + nu))
        total += term
        if k + 1 >= min_terms and abs(term) <= rtol * abs(total):
            return k + 1
        if k > 100000:
            raise ArithmeticError(f"C_{nu} series did not converge at t={t}")


def bessel_series(nu: int, t: float, n_terms: int | None = None) -> float:
    """``C_nu(t) = sum_{k>=0} t^k / (k! (k+nu)!)`` for integer ``nu >= 0``.

    ``C_0(t) = I_0(2 sqrt t)`` and ``d/dt C_nu = C_{nu+1}``. Any real ``t`` is
    accepted; for negative ``t`` the sum alternates and is only trustworthy for
    moderate ``|t|`` (cancellation grows like ``exp(2 sqrt|t|)``).
    """
    nu = int(nu)
    if nu < 0:
        raise ValueError("nu must be a nonnegative integer")
    t = float(t)
    if not math.isfinite(t):
        raise ValueError(f"t must be finite, got {t}")
    if n_terms is None:
        n_terms = bessel_series_terms(t, nu)
    term = 1.0 / math.factorial(nu)
    total = term
    for k in range(1, n_terms):
        term *= t / (k * (k + nu))
        total += term
    return total


def c0(t: float) -> float:
    """Bessel-type series ``C_0(t) = sum t^k / (k!)^2`` for ``t >= 0``."""
    t = float(t)
    if not t >= 0.0:
        raise ValueError(f"c0 is defined here for t >= 0 only, got {t}")
    return bessel_series(0, t)


def _check_eta(eta):
    arr = np.asarray(eta, dtype=float)
    if np.any(~(arr > 0.0)):
        raise ValueError("eta must be strictly positive (logarithmic singularity at eta=0)")
    return arr


_LN2 = math.log(2.0)


def log_sinh(eta):
    """``ln(sinh eta)`` without overflow for large ``eta``."""
    arr = _check_eta(eta)
    out = arr + np.log(-np.expm1(-2.0 * arr)) - math.log(2.0)
    return float(out) if out.ndim == 0 else out


def log_tanh_half(eta):
    """``ln(tanh(eta/2))`` accurate as it tends to ``0-`` for large ``eta``."""
    arr = _check_eta(eta)
    e = np.exp(-arr)
    # ln(1 - e^-eta): expm1 form for small eta, log1p form once e^-eta is tiny
    lo = np.log(-np.expm1(-np.minimum(arr, _LN2)))
    hi = np.log1p(-np.minimum(e, 0.5))
    out = np.where(arr < _LN2, lo, hi) - np.log1p(e)
    return float(out) if out.ndim == 0 else out
