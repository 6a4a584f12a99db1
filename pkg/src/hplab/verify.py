"""Residual engine and convergence-order fitting."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import expr as E
from .solutions import SolutionFamily
from .timeops import Kind, TimeOperator, apply_symbolic

ETA_FLOOR = 0.05
ETA_CEIL = 10.0
T_DEFAULT = 2.0
T0_GUARD = 1e-3
ROOT_MARGIN = 0.05


@dataclass(frozen=True)
class ResidualReport:
    family: str
    equation: str
    eta: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    max_abs_residual: float
    mean_abs_residual: float
    argmax: tuple[float, float]
    n_skipped: int = 0

    def passed(self, threshold: float = 1e-9) -> bool:
        return self.max_abs_residual <= threshold

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "equation": self.equation,
            "grid": {"eta": self.eta.tolist(), "t": self.t.tolist()},
            "max_abs_residual": self.max_abs_residual,
            "mean_abs_residual": self.mean_abs_residual,
            "argmax": {"eta": self.argmax[0], "t": self.argmax[1]},
            "n_skipped": self.n_skipped,
        }


def sample_grid(fam: SolutionFamily, n_eta: int = 40, n_t: int = 40,
                t_max: float | None = None, eta_range=None):
    """Log-spaced eta and uniform t sample inside the validity region.

    Stays ``ROOT_MARGIN`` (relative) away from a positivity root, above
    ``ETA_FLOOR`` and ``T0_GUARD * t0`` away from a finite-time singularity.
    """
    lo, hi = fam.validity.eta
    lo_s = max(ETA_FLOOR, lo * (1 + ROOT_MARGIN)) if lo > 0 else ETA_FLOOR
    hi_s = min(ETA_CEIL, hi * (1 - ROOT_MARGIN)) if math.isfinite(hi) else ETA_CEIL
    if eta_range is not None:
        lo_s, hi_s = max(lo_s, eta_range[0]), min(hi_s, eta_range[1])
    if not lo_s < hi_s:
        raise ValueError(f"no sample room in the validity region of {fam.name}")
    t_lo, t_hi = fam.validity.t
    t_end = t_hi * (1 - T0_GUARD) if math.isfinite(t_hi) else T_DEFAULT
    if t_max is not None:
        t_end = min(t_end, t_max)
    if not t_end > t_lo:
        raise ValueError(f"no sample room in t for {fam.name}")
    return np.geomspace(lo_s, hi_s, n_eta), np.linspace(t_lo, t_end, n_t)


def residual(fam: SolutionFamily, n_eta: int = 40, n_t: int = 40,
             t_max: float | None = None, eta_range=None) -> ResidualReport:
    """Max and mean ``|op[u] - F[u]|`` of the exact family on a tensor sample."""
    eta, t = sample_grid(fam, n_eta, n_t, t_max, eta_range)
    r = fam.residual_expr()
    f = E.compile_expr(r, mode=fam.mode)
    ee, tt = np.meshgrid(eta, t, indexing="ij")
    skipped = 0
    try:
        vals = np.abs(np.broadcast_to(f(ee, tt), ee.shape)).astype(float)
    except E.DomainError:
        # fall back to pointwise evaluation and drop failing points
        vals = np.full(ee.shape, np.nan)
        for idx in np.ndindex(ee.shape):
            try:
                vals[idx] = abs(f(ee[idx], tt[idx]))
            except E.DomainError:
                skipped += 1
        warnings.warn(f"{fam.name}: {skipped} sample points outside the evaluation domain were skipped",
                      RuntimeWarning, stacklevel=2)
        if skipped == vals.size:
            raise
    if not np.all(np.isfinite(vals[~np.isnan(vals)])):
        raise E.DomainError(f"{fam.name}: residual is not finite on the sample")
    k = np.nanargmax(vals)
    i, j = np.unravel_index(k, vals.shape)
    return ResidualReport(
        fam.name, fam.equation.src, eta, t,
        float(vals[i, j]), float(np.nanmean(vals)), (float(eta[i]), float(t[j])), skipped,
    )


def negative_controls(fam: SolutionFamily, factor: float = 1.1, **kw) -> dict[str, ResidualReport]:
    """Residual of each single-parameter perturbation of ``fam``."""
    return {w: residual(fam.perturbed(w, factor), **kw) for w in fam.perturbations()}


# ---------------------------------------------------------------------------
# Caputo table spot check


def caputo_quadrature(f, beta: float, t: float, *, epsabs: float = 1e-9, epsrel: float = 1e-9) -> float:
    """Caputo derivative of order ``beta`` of a callable ``f`` at ``t`` by quadrature.

    Uses the derivative-free Marchaud form
    ``(f(t)-f(0)) / (Gamma(1-beta) t^beta) + beta/Gamma(1-beta) int_0^t (f(t)-f(t-s)) s^(-1-beta) ds``
    with ``s = w^(1/(1-beta))`` so that the integrand is bounded at ``s = 0``.
    """
    if not (0.0 < beta < 1.0):
        raise ValueError("quadrature check needs 0 < beta < 1")
    if not t > 0:
        raise ValueError("t must be positive")
    g = math.gamma(1.0 - beta)
    ft = f(t)
    p = 1.0 / (1.0 - beta)

    def integrand(w):
        if w == 0.0:
            return 0.0
        s = w**p
        return (ft - f(max(t - s, 0.0))) * w ** (-p) * p

    # split where s = t/2: f(t - s) may be non-smooth as s -> t
    val, err = integrate.quad(integrand, 0.0, t ** (1.0 - beta), epsabs=epsabs, epsrel=epsrel, limit=200,
                              points=[(0.5 * t) ** (1.0 - beta)])
    return (ft - f(0.0)) / (g * t**beta) + beta / g * val


def caputo_table_check(profile: E.Expr, beta: float, ts=(0.25, 0.5, 1.0, 1.5, 2.0),
                       tol: float = 1e-6) -> float:
    """Max gap between the symbolic Caputo table and quadrature at ``ts``."""
    sym = E.compile_expr(apply_symbolic(TimeOperator.caputo(beta), profile))
    fn = E.compile_expr(profile)
    worst = 0.0
    for t in ts:
        q = caputo_quadrature(lambda x: float(fn(1.0, x)), beta, t)
        worst = max(worst, abs(q - float(sym(1.0, t))))
    if not worst <= tol:
        raise AssertionError(f"Caputo table disagrees with quadrature by {worst:.3g}")
    return worst


# ---------------------------------------------------------------------------
# convergence orders


@dataclass(frozen=True)
class ConvergenceReport:
    resolutions: tuple
    h: tuple
    errors_linf: tuple
    errors_l2: tuple
    pairwise: tuple
    global_order: float
    label: str = ""

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "resolutions": list(self.resolutions),
            "h": list(self.h),
            "errors_linf": list(self.errors_linf),
            "errors_l2": list(self.errors_l2),
            "pairwise": list(self.pairwise),
            "global_order": self.global_order,
        }


def fit_order(errors, h=None, resolutions=None, errors_l2=None, label: str = "") -> ConvergenceReport:
    """Pairwise and least-squares orders of ``errors`` against spacing ``h``.

    Without ``h`` the spacing is taken to halve at each level.
    """
    e = np.asarray(errors, dtype=float)
    if e.ndim != 1 or e.size < 3:
        raise ValueError("need at least three resolutions")
    if not np.all(np.isfinite(e)) or np.any(e <= 0):
        raise ValueError("errors must be positive and finite")
    hs = 0.5 ** np.arange(e.size) if h is None else np.asarray(h, dtype=float)
    if hs.shape != e.shape or np.any(hs <= 0) or np.any(np.diff(hs) >= 0):
        raise ValueError("spacings must be positive and strictly decreasing")
    res = tuple(range(1, e.size + 1)) if resolutions is None else tuple(resolutions)
    if len(res) != e.size or any(b <= a for a, b in zip(res, res[1:])):
        raise ValueError("resolutions must be strictly increasing")
    le, lh = np.log(e), np.log(hs)
    pair = tuple(float((le[k] - le[k + 1]) / (lh[k] - lh[k + 1])) for k in range(e.size - 1))
    slope = float(np.polyfit(lh, le, 1)[0])
    l2 = tuple(float(x) for x in errors_l2) if errors_l2 is not None else ()
    return ConvergenceReport(res, tuple(float(x) for x in hs), tuple(float(x) for x in e), l2,
                             pair, slope, label)


__all__ = [
    "ResidualReport", "ConvergenceReport", "residual", "sample_grid", "negative_controls",
    "caputo_quadrature", "caputo_table_check", "fit_order", "Kind",
]
