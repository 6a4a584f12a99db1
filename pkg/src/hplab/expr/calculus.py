"""Exact symbolic differentiation and the radial hyperbolic Laplacian."""

from __future__ import annotations

from . import nodes as N
from .nodes import Add, Const, Expr, Fun, Mul, Neg, Pow, Var
from .simplify import simplify


class UnsupportedDerivative(NotImplementedError):
    pass


def diff(e: Expr, var: str) -> Expr:
    """d e / d var, built with the folding constructors (not fully simplified)."""
    if isinstance(e, Const):
        return N.ZERO
    if isinstance(e, Var):
        return N.ONE if e.name == var else N.ZERO
    if not N.depends_on(e, var):
        return N.ZERO
    if isinstance(e, Add):
        return N.add(*(diff(a, var) for a in e.args))
    if isinstance(e, Neg):
        return N.neg(diff(e.arg, var))
    if isinstance(e, Mul):
        terms = []
        for i, a in enumerate(e.args):
            da = diff(a, var)
            if N.is_const(da, 0):
                continue
            terms.append(N.mul(*e.args[:i], da, *e.args[i + 1:]))
        return N.add(*terms) if terms else N.ZERO
    if isinstance(e, Pow):
        b, x = e.base, e.exp
        db = diff(b, var)
        if isinstance(x, Const):
            return N.mul(x, N.power(b, Const(x.value - 1)), db)
        # b^x = exp(x ln b)
        dx = diff(x, var)
        return N.mul(e, N.add(N.mul(dx, N.ln(b)), N.mul(x, db, N.power(b, Const(-1.0)))))
    if isinstance(e, Fun):
        return _diff_fun(e, var)
    raise TypeError(f"unknown node {e!r}")


def _diff_fun(e: Fun, var: str) -> Expr:
    name = e.name
    a = e.arg
    da = diff(a, var)
    if N.is_const(da, 0):
        return N.ZERO
    if name == "sinh":
        outer = N.cosh(a)
    elif name == "cosh":
        outer = N.sinh(a)
    elif name == "tanh":
        outer = N.power(N.cosh(a), Const(-2.0))
    elif name == "exp":
        outer = e
    elif name == "ln":
        outer = N.power(a, Const(-1.0))
    elif name == "sqrt":
        outer = N.mul(Const(0.5), N.power(e, Const(-1.0)))
    elif name == "cnu":
        outer = N.cnu(int(e.args[0].value) + 1, a)
    elif name == "ml" and e.args[0].value == 1.0:
        outer = e
    elif name == "ml":
        raise UnsupportedDerivative(
            "derivative of the Mittag-Leffler function needs the two-parameter function"
        )
    else:
        raise UnsupportedDerivative(f"no derivative rule for {name!r}")
    return N.mul(outer, da)


def hyperbolic_laplacian(e: Expr) -> Expr:
    """``(1/sinh eta) d/deta (sinh eta d e/deta)``, simplified."""
    s = N.sinh(N.ETA_VAR)
    flux = simplify(N.mul(s, diff(e, N.ETA)))
    return simplify(N.mul(N.power(s, Const(-1.0)), diff(flux, N.ETA)))
