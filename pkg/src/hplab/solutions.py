"""Exact solution families as sums of separable terms ``T_k(t) * S_k(eta)``.

Two constructions are provided:

* ``family_theorem21``: ``u = T(t) * (c1 ln tanh(eta/2) + c2)^(1/n)`` where the
  spatial factor raised to ``n`` lies in the kernel of the hyperbolic Laplacian
  and ``T`` is the eigenfunction of the time operator with eigenvalue -1
  (or the periodic factor for the shifted operator).
* ``family_theorem22``: ``u = f1 ln sinh(eta) + f2 ln tanh(eta/2) + f3`` for
  ``u_t = u lap(u)``, with ``f1' = f1^2``, ``f2' = f1 f2``, ``f3' = f1 f3``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import expr as E
from .expr import nodes as N
from .timeops import Kind, TimeOperator, apply_symbolic

POROUS_DECAY = "lap(u^n) - u"
QUASILINEAR = "u*lap(u)"
PERIODIC_FORCED = "lap(u^n)"

# first positive zero of c0(-t) = J0(2 sqrt t), i.e. (j_{0,1} / 2)^2
C0_NEG_FIRST_ZERO = 1.4457964907366962


class EmptyValidityRegion(ValueError):
    pass


# ---------------------------------------------------------------------------
# operators


def _lap_rewrite(e: E.Expr, u: E.Expr) -> E.Expr:
    if isinstance(e, E.Var) and e.name == "u":
        return u
    if isinstance(e, E.Fun) and e.name == "lap":
        return E.hyperbolic_laplacian(_lap_rewrite(e.arg, u))
    kids = N.children(e)
    if not kids:
        return e
    return N.rebuild(e, [_lap_rewrite(k, u) for k in kids])


@dataclass(frozen=True)
class OperatorSpec:
    """Equation ``time[u] = F[u]`` with ``F`` given as DSL text in ``u`` and ``lap``."""

    time: TimeOperator
    spatial: str
    n: float | None = None

    def __post_init__(self):
        self.parsed()  # fail early on bad text

    def parsed(self) -> E.Expr:
        bindings = {} if self.n is None else {"n": self.n}
        return E.parse(self.spatial, bindings, functions={"lap": 1}, params={"u"},
                       complex_mode=self.time.kind is Kind.SHIFTED)

    def apply_spatial(self, u: E.Expr) -> E.Expr:
        """``F[u]`` with every ``lap(.)`` expanded symbolically."""
        return _lap_rewrite(self.parsed(), u)

    def residual_expr(self, u: E.Expr) -> E.Expr:
        return E.simplify(N.add(apply_symbolic(self.time, u), N.neg(self.apply_spatial(u))))

    @property
    def src(self) -> str:
        src = self.spatial if self.n is None else self.spatial.replace("u^n", f"u^{self.n:g}")
        return f"{self.time.label}[u] = {src}"


def parse_operator(src: str, n: float | None = None) -> E.Expr:
    """Parse spatial operator text (``u`` and ``lap`` allowed)."""
    return E.parse(src, {} if n is None else {"n": n}, functions={"lap": 1}, params={"u"})


def apply_operator_text(src: str, u: E.Expr, n: float | None = None) -> E.Expr:
    return _lap_rewrite(parse_operator(src, n), u)


# ---------------------------------------------------------------------------
# validity


@dataclass(frozen=True)
class Validity:
    """Open eta-interval and half-open t-interval ``[t_lo, t_hi)``."""

    eta: tuple[float, float]
    t: tuple[float, float]

    @property
    def empty(self) -> bool:
        return not (self.eta[0] < self.eta[1] and self.t[0] < self.t[1])

    def to_dict(self) -> dict:
        def f(x):
            return None if math.isinf(x) else x
        return {"eta": [f(self.eta[0]), f(self.eta[1])], "t": [f(self.t[0]), f(self.t[1])]}


def positivity_interval(c1: float, c2: float) -> tuple[float, float]:
    """Largest eta-interval where ``c1 ln tanh(eta/2) + c2 > 0``.

    ``ln tanh(eta/2)`` increases from -inf to 0, so the set is an interval
    bounded by the root ``eta* = 2 atanh(exp(-c2/c1))`` when one exists.
    Returns ``(0, 0)`` if empty.
    """
    inf = math.inf
    if c1 == 0:
        return (0.0, inf) if c2 > 0 else (0.0, 0.0)
    r = -c2 / c1  # value of ln tanh(eta/2) at the root
    if r >= 0:
        # no root: sign is that of c1 * (negative) + c2
        return (0.0, inf) if c1 < 0 else (0.0, 0.0)
    # 2 atanh(e^r), stable as r -> 0-
    root = math.log1p(math.exp(r)) - math.log(-math.expm1(r))
    return (0.0, root) if c1 < 0 else (root, inf)


def validity_region(fam: "SolutionFamily") -> tuple[tuple[float, float], tuple[float, float]]:
    """``(eta-interval, t-interval)`` on which the family's domain guards hold."""
    return fam.validity.eta, fam.validity.t


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True, eq=False)
class SolutionFamily:
    name: str
    terms: tuple[tuple[E.Expr, E.Expr], ...]  # (temporal, spatial) pairs
    params: Mapping[str, float]
    equation: OperatorSpec
    validity: Validity
    mode: str = "real"
    note: str = ""

    @property
    def u(self) -> E.Expr:
        return N.add(*(N.mul(tk, sk) for tk, sk in self.terms))

    @property
    def spatial(self) -> E.Expr:
        if len(self.terms) != 1:
            raise AttributeError("multi-term family has one spatial factor per term")
        return self.terms[0][1]

    @property
    def temporal(self) -> E.Expr:
        if len(self.terms) != 1:
            raise AttributeError("multi-term family has one temporal factor per term")
        return self.terms[0][0]

    @property
    def spatial_src(self) -> str:
        return "; ".join(E.to_str(s) for _, s in self.terms)

    @property
    def temporal_src(self) -> str:
        return "; ".join(E.to_str(t) for t, _ in self.terms)

    def residual_expr(self) -> E.Expr:
        return self.equation.residual_expr(self.u)

    def exact(self) -> Callable:
        """Vectorized ``u(eta, t)``."""
        return E.compile_expr(self.u, mode=self.mode)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": {k: _jsonable(v) for k, v in self.params.items()},
            "spatial_src": self.spatial_src,
            "temporal_src": self.temporal_src,
            "equation_src": self.equation.src,
            "validity": self.validity.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    # negative controls ------------------------------------------------------

    def perturbations(self) -> list[str]:
        if self.name not in DEFAULTS or "f1" in self.params:
            return []
        return list(_PERTURBATIONS.get(self.name, ()))

    def perturbed(self, which: str, factor: float = 1.1) -> "SolutionFamily":
        """Family with one parameter changed in the solution only.

        The equation is left untouched, so the result should fail its residual.
        """
        if which not in self.perturbations():
            raise KeyError(f"{self.name!r} has no perturbation {which!r}")
        params = {k: v for k, v in self.params.items() if k != "literal"}
        fam = build_family(self.name, _perturb=(which, factor), **params)
        return _replace_name(fam, f"{self.name}~{which}")


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (str, int, float)) or v is None:
        return v
    return str(v)


def _replace_name(fam: SolutionFamily, name: str) -> SolutionFamily:
    return SolutionFamily(name, fam.terms, fam.params, fam.equation, fam.validity, fam.mode, fam.note)


def _temporal_profile(op: TimeOperator, *, rate: float, literal: bool = False):
    t = N.T_VAR
    if op.kind is Kind.CLASSICAL:
        return N.exp(N.mul(N.Const(-rate), t))
    if op.kind is Kind.CAPUTO:
        b = op.beta
        return N.ml(b, N.mul(N.Const(-rate), N.power(t, N.Const(b))))
    if op.kind is Kind.LAGUERRE:
        return N.cnu(0, N.mul(N.Const(rate if literal else -rate), t))
    lam = op.lam
    return N.exp(N.mul(N.Const(lam * rate), t))


def family_theorem21(op: TimeOperator, n: float, c1: float, c2: float, *,
                     omega: float | None = None, alpha: float | None = None,
                     literal: bool = False, t_max: float = math.inf,
                     _perturb=None) -> SolutionFamily:
    """``u = T(t) (c1 ln tanh(eta/2) + c2)^(1/n)``.

    ``T`` is ``exp(-t)``, ``E_beta(-t^beta)``, ``c0(-t)`` or ``exp(i omega t / alpha)``
    depending on ``op``. For the shifted operator pass ``omega`` and
    ``alpha`` instead of ``op.lam``. ``literal=True`` selects the ``c0(t)``
    profile for the Laguerre operator, which does not satisfy the equation
    and is kept only to report its residual.
    """
    n, c1, c2 = float(n), float(c1), float(c2)
    if not n > 1:
        raise ValueError(f"n must exceed 1, got {n}")
    if op is None:
        raise ValueError("time operator required")
    if omega is not None or alpha is not None:
        if omega is None or alpha is None or alpha == 0:
            raise ValueError("periodic family needs omega and nonzero alpha")
        op = TimeOperator.shifted(1j * float(omega) / float(alpha))
    mode = "real"
    equation_src = POROUS_DECAY
    if op.kind is Kind.SHIFTED:
        if not N.is_int_value(n):
            raise ValueError("the periodic family needs an integer n (principal-branch powers)")
        if op.lam.real != 0:
            raise ValueError("the periodic family needs a purely imaginary shift")
        mode = "complex"
        equation_src = PERIODIC_FORCED

    which, factor = _perturb or (None, 1.0)
    root_n = n * factor if which == "n" else n
    rate = factor if which == "rate" else 1.0

    lo, hi = positivity_interval(c1, c2)
    t_hi = t_max
    if op.kind is Kind.LAGUERRE and not literal and not N.is_int_value(n):
        # c0(-t) changes sign here and u^n would leave the reals
        t_hi = min(t_hi, C0_NEG_FIRST_ZERO)
    validity = Validity((lo, hi), (0.0, t_hi))
    if validity.empty:
        raise EmptyValidityRegion(f"empty validity region for c1={c1:g}, c2={c2:g}")

    s = N.add(N.mul(N.Const(c1), N.ln(N.tanh(N.mul(N.Const(0.5), N.ETA_VAR)))), N.Const(c2))
    spatial = N.power(s, N.Const(1.0 / root_n))
    temporal = _temporal_profile(op, rate=rate, literal=literal)
    if which == "offset":
        temporal = N.add(temporal, N.Const(factor - 1.0))

    kind = {Kind.CLASSICAL: "classical", Kind.CAPUTO: "caputo", Kind.LAGUERRE: "laguerre",
            Kind.SHIFTED: "periodic"}[op.kind]
    name = f"theorem21-{kind}" + ("-literal" if literal else "")
    params: dict = {"n": n, "c1": c1, "c2": c2}
    if op.kind is Kind.CAPUTO:
        params["beta"] = op.beta
    if op.kind is Kind.SHIFTED:
        params["omega"] = float(omega) if omega is not None else op.lam.imag
        params["alpha"] = float(alpha) if alpha is not None else 1.0
    if math.isfinite(t_max):
        params["t_max"] = t_max
    note = ""
    if literal:
        note = ("c0(t) satisfies d/dt t d/dt f = +f, so the residual is 2 c0(t) S^(1/n); "
                "reported, not admitted")
    eq = OperatorSpec(op, equation_src, n)
    return SolutionFamily(name, ((temporal, spatial),), params, eq, validity, mode, note)


def _t_profile(f) -> E.Expr:
    if isinstance(f, E.Expr):
        g = f
    else:
        g = E.parse(str(f), params=set())
    bad = N.free_vars(g) - {N.T}
    if bad:
        raise ValueError(f"temporal function may depend on t only, found {sorted(bad)}")
    return g


def family_theorem22(op: TimeOperator | None = None, f1=None, f2=None, f3=None, *,
                     t0: float = 1.0, c1: float = 0.5, c2: float = 0.25,
                     name: str = "theorem22-general", ode_tol: float = 1e-9,
                     _perturb=None) -> SolutionFamily:
    """``u = f1 ln sinh(eta) + f2 ln tanh(eta/2) + f3`` for ``op[u] = u lap(u)``.

    With the classical operator and no ``f`` given, uses
    ``f1 = 1/(t0-t)``, ``f2 = c1/(t0-t)``, ``f3 = c2/(t0-t)``. Supplied
    functions (Expr or DSL text in ``t``) are checked against the ODE system
    ``op f1 = f1^2``, ``op f2 = f1 f2``, ``op f3 = f1 f3``.
    """
    op = op or TimeOperator.classical()
    t0, c1, c2 = float(t0), float(c1), float(c2)
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    which, factor = _perturb or (None, 1.0)
    supplied = f1 is not None or f2 is not None or f3 is not None
    t = N.T_VAR
    if supplied:
        if f1 is None or f2 is None or f3 is None:
            raise ValueError("supply all of f1, f2, f3 or none")
        fs = [_t_profile(f) for f in (f1, f2, f3)]
        t_hi = math.inf
        for f in fs:
            if N.depends_on(f, N.T) and _has_pole(f):
                t_hi = t0
        _check_odes(op, fs, min(t_hi * (1 - 1e-3), 1.0) if math.isfinite(t_hi) else 1.0, ode_tol)
    else:
        if op.kind is not Kind.CLASSICAL:
            raise ValueError("closed-form f1, f2, f3 are only known for the classical operator")
        inv = N.power(N.add(N.Const(t0), N.neg(t)), N.Const(-1.0))
        inv1 = inv
        if which == "t0":
            inv1 = N.power(N.add(N.Const(t0 * factor), N.neg(t)), N.Const(-1.0))
        elif which == "f1-scale":
            inv1 = N.mul(N.Const(factor), inv)
        fs = [inv1, N.mul(N.Const(c1), inv), N.mul(N.Const(c2), inv)]
        t_hi = t0
    spatial = [N.ln(N.sinh(N.ETA_VAR)), N.ln(N.tanh(N.mul(N.Const(0.5), N.ETA_VAR))), N.ONE]
    terms = tuple((f, s) for f, s in zip(fs, spatial))
    params: dict = {"t0": t0, "c1": c1, "c2": c2}
    if supplied:
        params = {"t0": t0, "f1": E.to_str(fs[0]), "f2": E.to_str(fs[1]), "f3": E.to_str(fs[2])}
    eq = OperatorSpec(op, QUASILINEAR)
    return SolutionFamily(name, terms, params, eq, Validity((0.0, math.inf), (0.0, t_hi)))


def _has_pole(f: E.Expr) -> bool:
    return any(isinstance(x, E.Pow) and isinstance(x.exp, E.Const) and not x.exp.is_complex
               and x.exp.value < 0 for x in _walk(f))


def _walk(e: E.Expr):
    yield e
    for k in N.children(e):
        yield from _walk(k)


def _check_odes(op: TimeOperator, fs: Sequence[E.Expr], t_hi: float, tol: float) -> None:
    f1, f2, f3 = fs
    rhs = [N.mul(f1, f1), N.mul(f1, f2), N.mul(f1, f3)]
    ts = np.linspace(0.0, t_hi, 64)
    for k, (f, r) in enumerate(zip(fs, rhs), start=1):
        res = E.compile_expr(E.simplify(N.add(apply_symbolic(op, f), N.neg(r))))(1.0, ts)
        scale = 1.0 + np.abs(E.compile_expr(r)(1.0, ts))
        worst = float(np.max(np.abs(res) / scale))
        if not worst <= tol:
            raise ValueError(f"f{k} does not satisfy its ODE (relative residual {worst:.3g})")


def family_blowup(t0: float = 1.0, c1: float = 1.0, c2: float = 0.0, _perturb=None) -> SolutionFamily:
    """Classical blow-up member ``(ln sinh + c1 ln tanh(eta/2) + c2) / (t0 - t)``."""
    return family_theorem22(TimeOperator.classical(), t0=t0, c1=c1, c2=c2,
                            name="theorem22-blowup", _perturb=_perturb)


# ``c1``/``c2`` rescalings are not listed: any kernel combination and any
# multiple of the linear f2/f3 equations is again an exact solution.
_PERTURBATIONS = {
    "theorem21-classical": ("n", "rate", "offset"),
    "theorem21-caputo": ("n", "rate", "offset"),
    "theorem21-laguerre": ("n", "rate", "offset"),
    "theorem21-periodic": ("n", "rate", "offset"),
    "theorem22-general": ("t0", "f1-scale"),
    "theorem22-blowup": ("t0", "f1-scale"),
}


# ---------------------------------------------------------------------------
# named families and the catalog

DEFAULTS: dict[str, dict] = {
    "theorem21-classical": {"n": 2.0, "c1": -1.0, "c2": 0.1},
    "theorem21-caputo": {"n": 3.0, "c1": -1.0, "c2": 1.0, "beta": 0.5},
    "theorem21-laguerre": {"n": 2.0, "c1": -1.0, "c2": 0.1},
    "theorem21-laguerre-literal": {"n": 2.0, "c1": -1.0, "c2": 0.1},
    "theorem21-periodic": {"n": 2.0, "c1": -1.0, "c2": 0.1, "omega": 2.0, "alpha": 1.0},
    "theorem22-general": {"t0": 1.0, "c1": 0.5, "c2": 0.25},
    "theorem22-blowup": {"t0": 1.0, "c1": 1.0, "c2": 0.0},
}

CATALOG_NAMES = (
    "theorem21-classical", "theorem21-caputo", "theorem21-laguerre", "theorem21-periodic",
    "theorem22-general", "theorem22-blowup",
)


def family_names() -> list[str]:
    return list(DEFAULTS)


def build_family(name: str, _perturb=None, **overrides) -> SolutionFamily:
    """Build a named family; ``overrides`` replace the default parameters."""
    if name not in DEFAULTS:
        raise KeyError(f"unknown family {name!r}; known: {', '.join(DEFAULTS)}")
    p = {**DEFAULTS[name], **{k: v for k, v in overrides.items() if v is not None}}
    unknown = set(p) - set(DEFAULTS[name]) - {"t_max"}
    if _perturb is not None:
        p["_perturb"] = _perturb
    if unknown:
        raise ValueError(f"family {name!r} does not take {sorted(unknown)}")
    if name == "theorem21-classical":
        return family_theorem21(TimeOperator.classical(), **p)
    if name == "theorem21-caputo":
        beta = p.pop("beta")
        return family_theorem21(TimeOperator.caputo(beta), **p)
    if name in ("theorem21-laguerre", "theorem21-laguerre-literal"):
        return family_theorem21(TimeOperator.laguerre(), literal=name.endswith("literal"), **p)
    if name == "theorem21-periodic":
        omega, alpha = p.pop("omega"), p.pop("alpha")
        return family_theorem21(TimeOperator.classical(), omega=omega, alpha=alpha, **p)
    p.pop("t_max", None)
    if name == "theorem22-blowup":
        return family_blowup(**p)
    return family_theorem22(TimeOperator.classical(), **p)


@dataclass(frozen=True)
class Catalog:
    families: tuple[SolutionFamily, ...]
    residuals: tuple[float, ...] = field(default=())

    def __iter__(self):
        return iter(self.families)

    def __len__(self):
        return len(self.families)

    def __getitem__(self, name: str) -> SolutionFamily:
        for f in self.families:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_json(self) -> str:
        return json.dumps([f.to_dict() for f in self.families], sort_keys=True, indent=1)


def catalog(gate: float = 1e-9) -> Catalog:
    """Default families, each admitted only if its residual is below ``gate``."""
    from .verify import residual

    fams, res = [], []
    for name in CATALOG_NAMES:
        fam = build_family(name)
        rep = residual(fam)
        if not rep.max_abs_residual <= gate:
            raise AssertionError(f"{name} failed the residual gate: {rep.max_abs_residual:.3g} > {gate:g}")
        fams.append(fam)
        res.append(rep.max_abs_residual)
    return Catalog(tuple(fams), tuple(res))
