"""Numerical test of whether ``F[u]`` maps a span of functions of eta into itself.

For random coefficient draws ``c`` the operator is applied to
``u = sum c_j phi_j`` symbolically, sampled, and projected onto the basis by
least squares. A small relative residual in every trial is reported as
"invariant to tolerance": evidence, not proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as E
from .expr import nodes as N
from .solutions import OperatorSpec, apply_operator_text

DEFAULT_THRESHOLD = 1e-7
DEFAULT_RANGE = (0.1, 10.0)
DEFAULT_TRIALS = 20
DEFAULT_COEF_RANGE = (-2.0, 2.0)
SINGULAR_GATE = 1e-8

W3_BASIS = ("ln(sinh(eta))", "ln(tanh(eta/2))", "1")


class IllConditionedBasis(ValueError):
    pass


def _as_basis(b) -> tuple[E.Expr, ...]:
    out = []
    for phi in b:
        e = phi if isinstance(phi, E.Expr) else E.parse(str(phi), params=set())
        if N.free_vars(e) - {N.ETA}:
            raise ValueError(f"basis function {E.to_str(e)!r} may depend on eta only")
        out.append(E.simplify(e))
    if not out:
        raise ValueError("basis must have at least one function")
    return tuple(out)


def parse_basis(text: str) -> tuple[E.Expr, ...]:
    """Parse a ``;``-separated basis list."""
    return _as_basis([p.strip() for p in text.split(";") if p.strip()])


@dataclass(frozen=True)
class SubspaceSpec:
    basis: tuple
    eta_range: tuple[float, float] = DEFAULT_RANGE
    M: int | None = None
    trials: int = DEFAULT_TRIALS
    coef_range: tuple[float, float] = DEFAULT_COEF_RANGE
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "basis", _as_basis(self.basis))
        k = len(self.basis)
        if self.M is None:
            object.__setattr__(self, "M", 8 * k)
        if self.M < 2 * k:
            raise ValueError(f"need M >= 2k = {2 * k} sample points, got {self.M}")
        lo, hi = self.eta_range
        if not (0 < lo < hi):
            raise ValueError("eta_range must satisfy 0 < lo < hi")
        if self.trials < 1:
            raise ValueError("need at least one trial")

    @property
    def k(self) -> int:
        return len(self.basis)

    def points(self) -> np.ndarray:
        return np.geomspace(self.eta_range[0], self.eta_range[1], self.M)

    def sample_matrix(self) -> np.ndarray:
        x = self.points()
        cols = [np.broadcast_to(E.evaluate_grid(phi, x, 0.0), x.shape) for phi in self.basis]
        return np.column_stack(cols)


@dataclass(frozen=True)
class InvarianceVerdict:
    invariant: bool
    worst_relative_residual: float
    residuals: tuple[float, ...]
    coefficients: np.ndarray = field(repr=False)  # trials x k inputs
    maps: np.ndarray = field(repr=False)  # trials x k fitted outputs
    threshold: float = DEFAULT_THRESHOLD
    smallest_singular_value: float = math.nan

    @property
    def label(self) -> str:
        return "invariant to tolerance" if self.invariant else "not invariant"


class _Projector:
    def __init__(self, sub: SubspaceSpec):
        phi = sub.sample_matrix()
        norms = np.linalg.norm(phi, axis=0)
        if np.any(norms == 0):
            raise IllConditionedBasis("a basis function vanishes on the sample")
        self.phi = phi
        self.norms = norms
        self.phin = phi / norms
        s = np.linalg.svd(self.phin, compute_uv=False)
        self.smin = float(s[-1])
        if not self.smin > SINGULAR_GATE:
            raise IllConditionedBasis(
                f"basis is numerically dependent on the sample (smallest singular value {self.smin:.3g})")

    def fit(self, w: np.ndarray) -> tuple[np.ndarray, float]:
        y, *_ = np.linalg.lstsq(self.phin, w, rcond=None)
        a = y / self.norms
        r = np.linalg.norm(self.phi @ a - w) / max(1.0, float(np.linalg.norm(w)))
        return a, float(r)


def _operator_expr(op, sub: SubspaceSpec, n=None) -> tuple[E.Expr, list[str]]:
    names = [f"_c{j}" for j in range(sub.k)]
    u = N.add(*(N.mul(N.Var(c), phi) for c, phi in zip(names, sub.basis)))
    if isinstance(op, OperatorSpec):
        f = op.apply_spatial(u)
    else:
        f = apply_operator_text(str(op), u, n)
    return E.simplify(f), names


def _apply(f: E.Expr, names, c, x) -> np.ndarray:
    fn = E.compile_expr(f, dict(zip(names, (float(v) for v in c))))
    try:
        w = fn(x, 0.0)
    except E.DomainError as exc:
        raise E.DomainError(f"operator could not be evaluated on the sample: {exc}") from exc
    return np.broadcast_to(np.asarray(w, dtype=float), x.shape)


def check_invariance(op, sub: SubspaceSpec, threshold: float = DEFAULT_THRESHOLD,
                     n: float | None = None) -> InvarianceVerdict:
    """Decide whether ``op`` (DSL text or ``OperatorSpec``) preserves ``span(sub.basis)``."""
    proj = _Projector(sub)
    f, names = _operator_expr(op, sub, n)
    x = sub.points()
    rng = np.random.default_rng(sub.seed)
    lo, hi = sub.coef_range
    cs = rng.uniform(lo, hi, size=(sub.trials, sub.k))
    maps = np.empty_like(cs)
    res = []
    for i, c in enumerate(cs):
        a, r = proj.fit(_apply(f, names, c, x))
        maps[i] = a
        res.append(r)
    worst = max(res)
    return InvarianceVerdict(worst < threshold, worst, tuple(res), cs, maps, threshold, proj.smin)


def induced_coefficient_map(op, sub: SubspaceSpec, c: Sequence[float], n: float | None = None,
                            threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Coefficients ``a`` with ``F[sum c_j phi_j] = sum a_j phi_j`` (least squares)."""
    c = np.asarray(c, dtype=float)
    if c.shape != (sub.k,):
        raise ValueError(f"need {sub.k} coefficients, got shape {c.shape}")
    proj = _Projector(sub)
    f, names = _operator_expr(op, sub, n)
    a, r = proj.fit(_apply(f, names, c, sub.points()))
    if not r < threshold:
        raise ValueError(f"image is not in the span (relative residual {r:.3g})")
    return a


def w3_expected_map(c: Sequence[float]) -> np.ndarray:
    """``u lap(u)`` on ``<ln sinh, ln tanh(eta/2), 1>``: ``c -> (c1^2, c1 c2, c1 c3)``."""
    c1, c2, c3 = c
    return np.array([c1 * c1, c1 * c2, c1 * c3])


def w3_permutation(sub: SubspaceSpec) -> list[int] | None:
    """Positions of ``ln sinh``, ``ln tanh(eta/2)`` and ``1`` in ``sub.basis``, if it is W3."""
    ref = _as_basis(W3_BASIS)
    if len(sub.basis) != 3:
        return None
    try:
        return [sub.basis.index(r) for r in ref]
    except ValueError:
        return None


def w3_map_check(verdict: InvarianceVerdict, sub: SubspaceSpec) -> float | None:
    """Worst relative gap between the fitted maps and ``(c1^2, c1 c2, c1 c3)``."""
    perm = w3_permutation(sub)
    if perm is None:
        return None
    worst = 0.0
    for c, a in zip(verdict.coefficients, verdict.maps):
        want = w3_expected_map(c[perm])
        got = a[perm]
        worst = max(worst, float(np.linalg.norm(got - want) / max(1e-300, np.linalg.norm(want))))
    return worst
