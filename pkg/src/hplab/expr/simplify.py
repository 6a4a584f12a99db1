"""A small fixed rewrite system, run to a fixed point.

Rules: flattening, constant folding, identity/zero elimination, collection of
like terms and like factors (``x * x^-1 -> 1``), ``tanh -> sinh/cosh``
expansion inside products, the double-angle collapse
``sinh(a) cosh(a) -> sinh(2a)/2`` and distribution of products over sums.
That is enough for the hyperbolic-Laplacian identities to reach literal
constants; anything fancier is left to pointwise evaluation.
"""

from __future__ import annotations

import cmath
import math

from . import nodes as N
from .nodes import Add, Const, Expr, Fun, Mul, Neg, Pow, Var

MAX_PASSES = 64
MAX_DISTRIBUTED_TERMS = 64


def simplify(e: Expr, max_passes: int = MAX_PASSES) -> Expr:
    for _ in range(max_passes):
        new = _pass(e)
        if new == e:
            return new
        e = new
    return e


def _key(e: Expr):
    return (0 if isinstance(e, Const) else 1, N.to_str(e))


def _pass(e: Expr) -> Expr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        return _mul([Const(-1.0), _pass(e.arg)])
    if isinstance(e, Add):
        return _add([_pass(a) for a in e.args])
    if isinstance(e, Mul):
        return _mul([_pass(a) for a in e.args])
    if isinstance(e, Pow):
        return _pow(_pass(e.base), _pass(e.exp))
    if isinstance(e, Fun):
        return _fun(e.name, [_pass(a) for a in e.args])
    raise TypeError(f"unknown node {e!r}")


_FOLD = {
    "sinh": (math.sinh, cmath.sinh),
    "cosh": (math.cosh, cmath.cosh),
    "tanh": (math.tanh, cmath.tanh),
    "exp": (math.exp, cmath.exp),
}


def _fun(name: str, args: list[Expr]) -> Expr:
    if len(args) == 1 and isinstance(args[0], Const):
        v = args[0].value
        try:
            if name in _FOLD:
                r = _FOLD[name][isinstance(v, complex)](v)
                return Const(r)
            if name == "ln" and (isinstance(v, complex) and v != 0 or not isinstance(v, complex) and v > 0):
                return Const(cmath.log(v) if isinstance(v, complex) else math.log(v))
            if name == "sqrt" and (isinstance(v, complex) or v >= 0):
                return Const(cmath.sqrt(v) if isinstance(v, complex) else math.sqrt(v))
        except (OverflowError, ValueError):
            pass
    return Fun(name, args)


def _pow(base: Expr, exp: Expr) -> Expr:
    if not isinstance(exp, Const):
        return Pow(base, exp)
    x = exp.value
    if x == 0:
        return N.ONE
    if x == 1:
        return base
    if isinstance(base, Const):
        folded = N.power(base, exp)
        if isinstance(folded, Const):
            return folded
        return Pow(base, exp)
    if N.is_int_value(x):
        if isinstance(base, Pow) and isinstance(base.exp, Const) and not base.exp.is_complex:
            return _pow(base.base, Const(base.exp.value * x))
        if isinstance(base, Mul):
            return _mul([_pow(f, exp) for f in base.args])
    return Pow(base, exp)


def _split_power(f: Expr):
    if isinstance(f, Pow) and isinstance(f.exp, Const) and not f.exp.is_complex:
        return f.base, f.exp.value
    return f, 1.0


def _add(terms: list[Expr]) -> Expr:
    flat: list[Expr] = []
    for t in terms:
        flat.extend(t.args if isinstance(t, Add) else (t,))
    const = 0.0
    coeffs: dict[Expr, complex] = {}
    for t in flat:
        if isinstance(t, Const):
            const += t.value
            continue
        if isinstance(t, Mul) and isinstance(t.args[0], Const):
            c = t.args[0].value
            rest = t.args[1] if len(t.args) == 2 else Mul(t.args[1:])
        else:
            c, rest = 1.0, t
        coeffs[rest] = coeffs.get(rest, 0.0) + c
    out = []
    for rest, c in coeffs.items():
        if c == 0:
            continue
        out.append(rest if c == 1 else _mul([Const(c), rest]))
    if const != 0:
        out.append(Const(const))
    if not out:
        return N.ZERO
    if len(out) == 1:
        return out[0]
    return Add(sorted(out, key=_key))


def _mul(factors: list[Expr]) -> Expr:
    flat: list[Expr] = []
    stack = list(factors)
    while stack:
        f = stack.pop(0)
        if isinstance(f, Mul):
            stack[:0] = list(f.args)
        else:
            flat.append(f)
    const = 1.0
    powers: dict[Expr, float] = {}
    order: list[Expr] = []

    def bump(base, x):
        if base not in powers:
            powers[base] = 0.0
            order.append(base)
        powers[base] += x

    for f in flat:
        if isinstance(f, Const):
            const *= f.value
            continue
        base, x = _split_power(f)
        if isinstance(base, Fun) and base.name == "tanh" and N.is_int_value(x):
            bump(Fun("sinh", base.args), x)
            bump(Fun("cosh", base.args), -x)
        else:
            bump(base, x)
    if const == 0:
        return N.ZERO

    # sinh(a)^p cosh(a)^q with same-signed integer p, q -> sinh(2a)^m 2^-m ...
    for base in list(order):
        if not (isinstance(base, Fun) and base.name == "sinh"):
            continue
        partner = Fun("cosh", base.args)
        p, q = powers.get(base, 0.0), powers.get(partner, 0.0)
        if p == 0 or q == 0 or not (N.is_int_value(p) and N.is_int_value(q)) or (p > 0) != (q > 0):
            continue
        m = math.copysign(min(abs(p), abs(q)), p)
        powers[base] = p - m
        powers[partner] = q - m
        bump(Fun("sinh", (_mul([Const(2.0), base.arg]),)), m)
        const *= 2.0 ** (-m)

    out: list[Expr] = []
    for base in order:
        x = powers[base]
        if x == 0:
            continue
        f = _pow(base, Const(x))
        if isinstance(f, Const):
            const *= f.value
        elif isinstance(f, Mul):
            for g in f.args:
                if isinstance(g, Const):
                    const *= g.value
                else:
                    out.append(g)
        else:
            out.append(f)
    if const == 0:
        return N.ZERO

    sums = [f for f in out if isinstance(f, Add)]
    if sums:
        n_terms = 1
        for s in sums:
            n_terms *= len(s.args)
        if n_terms <= MAX_DISTRIBUTED_TERMS:
            others = [f for f in out if not isinstance(f, Add)]
            combos: list[list[Expr]] = [[Const(const)] + others]
            for s in sums:
                combos = [c + [t] for c in combos for t in s.args]
            return _add([_mul(c) for c in combos])

    out.sort(key=_key)
    if not out:
        return Const(const)
    if const == 1 and len(out) == 1:
        return out[0]
    if const != 1:
        out.insert(0, Const(const))
    return Mul(out)
