"""Pointwise and vectorized evaluation of expression trees.

Trees are compiled once into nested closures; the closures work on Python
scalars and numpy arrays alike. Real mode rejects complex constants and
domain violations (``ln`` of nonpositive numbers, non-integer powers of
negative numbers, division by zero, overflow).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import specfun
from . import nodes as N
from .nodes import Add, Const, Expr, Fun, Mul, Neg, Pow, Var


class DomainError(ArithmeticError):
    pass


class UnboundParameterError(KeyError):
    def __str__(self):
        return f"unbound parameter {self.args[0]!r}"


@dataclass(frozen=True)
class EvalPoint:
    eta: float
    t: float = 0.0
    mode: str = "real"

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta}")
        if self.mode not in ("real", "complex"):
            raise ValueError(f"mode must be 'real' or 'complex', got {self.mode!r}")


def _check_real(x, name):
    if np.iscomplexobj(x):
        raise DomainError(f"{name} produced a complex value in real mode")


def compile_expr(e: Expr, bindings=None, mode: str = "real"):
    """Return ``f(eta, t)`` evaluating ``e`` with parameters from ``bindings``."""
    if mode not in ("real", "complex"):
        raise ValueError(f"mode must be 'real' or 'complex', got {mode!r}")
    cplx = mode == "complex"
    bindings = dict(bindings or {})

    def build(node: Expr):
        if isinstance(node, Const):
            v = node.value
            if isinstance(v, complex) and not cplx:
                raise DomainError(f"complex constant {v} in real mode")
            return lambda eta, t: v
        if isinstance(node, Var):
            if node.name == N.ETA:
                return lambda eta, t: eta
            if node.name == N.T:
                return lambda eta, t: t
            if node.name not in bindings:
                raise UnboundParameterError(node.name)
            v = bindings[node.name]
            if isinstance(v, Expr):
                return build(v)
            if isinstance(v, complex) and not cplx:
                raise DomainError(f"complex value for {node.name!r} in real mode")
            return lambda eta, t: v
        if isinstance(node, Add):
            fs = [build(a) for a in node.args]

            def f_add(eta, t):
                acc = fs[0](eta, t)
                for g in fs[1:]:
                    acc = acc + g(eta, t)
                return acc
            return f_add
        if isinstance(node, Mul):
            fs = [build(a) for a in node.args]

            def f_mul(eta, t):
                acc = fs[0](eta, t)
                for g in fs[1:]:
                    acc = acc * g(eta, t)
                return acc
            return f_mul
        if isinstance(node, Neg):
            g = build(node.arg)
            return lambda eta, t: -g(eta, t)
        if isinstance(node, Pow):
            return _build_pow(node, build, cplx)
        if isinstance(node, Fun):
            return _build_fun(node, build, cplx)
        raise TypeError(f"unknown node {node!r}")

    inner = build(e)

    def run(eta, t=0.0):
        eta = np.asarray(eta, dtype=float) if np.ndim(eta) else np.float64(eta)
        t = np.asarray(t, dtype=float) if np.ndim(t) else np.float64(t)
        with np.errstate(over="raise", divide="raise", invalid="raise"):
            try:
                return inner(eta, t)
            except (FloatingPointError, ZeroDivisionError, OverflowError) as exc:
                raise DomainError(str(exc)) from exc

    return run


def _build_pow(node: Pow, build, cplx):
    b = build(node.base)
    if isinstance(node.exp, Const):
        x = node.exp.value
        if N.is_int_value(x):
            k = int(x)
            return lambda eta, t: b(eta, t) ** k

        def f_pow(eta, t):
            v = b(eta, t)
            if not np.iscomplexobj(v) and np.any(np.asarray(v) < 0):
                if not cplx:
                    raise DomainError(f"non-integer power {x} of a negative number")
                v = np.asarray(v, dtype=complex)
            return np.power(v, x)
        return f_pow
    g = build(node.exp)

    def f_gpow(eta, t):
        v = b(eta, t)
        w = g(eta, t)
        if not cplx and np.any(v <= 0):
            raise DomainError("general power needs a positive base in real mode")
        return np.exp(w * np.log(v))
    return f_gpow


_NP = {"sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh, "exp": np.exp}


def _build_fun(node: Fun, build, cplx):
    name = node.name
    if name in _NP:
        g = build(node.arg)
        fn = _NP[name]
        return lambda eta, t: fn(g(eta, t))
    if name == "ln":
        inner = node.arg
        # overflow-safe special forms for the spatial profiles
        if isinstance(inner, Fun) and inner.name in ("tanh", "sinh"):
            a = build(inner.arg)
            gen = build(inner)
            stable = (lambda x: specfun.log_tanh_half(2.0 * x)) if inner.name == "tanh" else specfun.log_sinh

            def f_ln_special(eta, t):
                x = a(eta, t)
                if not np.iscomplexobj(x) and np.all(np.asarray(x) > 0):
                    return stable(x)
                return _ln(gen(eta, t), cplx)
            return f_ln_special
        g = build(inner)
        return lambda eta, t: _ln(g(eta, t), cplx)
    if name == "sqrt":
        g = build(node.arg)

        def f_sqrt(eta, t):
            v = g(eta, t)
            if not np.iscomplexobj(v) and np.any(v < 0):
                if not cplx:
                    raise DomainError("sqrt of a negative number in real mode")
                v = np.asarray(v, dtype=complex)
            return np.sqrt(v)
        return f_sqrt
    if name == "ml":
        beta = node.args[0].value
        g = build(node.args[1])
        otype = complex if cplx else float

        def one(z):
            try:
                return specfun.mittag_leffler(beta, z)
            except ValueError as exc:
                raise DomainError(str(exc)) from exc
        vec = np.vectorize(one, otypes=[otype])

        def f_ml(eta, t):
            z = g(eta, t)
            if np.ndim(z) == 0:
                return otype(one(z.item() if hasattr(z, "item") else z))
            return vec(z)
        return f_ml
    if name == "cnu":
        nu = int(node.args[0].value)
        g = build(node.args[1])

        def one_c(x):
            if isinstance(x, complex):
                if x.imag != 0:
                    raise DomainError("cnu is evaluated for real arguments only")
                x = x.real
            return specfun.bessel_series(nu, x)
        vec_c = np.vectorize(one_c, otypes=[float])

        def f_cnu(eta, t):
            x = g(eta, t)
            if np.ndim(x) == 0:
                return one_c(x.item() if hasattr(x, "item") else x)
            return vec_c(x)
        return f_cnu
    raise DomainError(f"cannot evaluate function {name!r}")


def _ln(v, cplx):
    if np.iscomplexobj(v):
        if np.any(v == 0):
            raise DomainError("ln of zero")
        return np.log(v)
    if np.any(v <= 0):
        if not cplx or np.any(v == 0):
            raise DomainError("ln of a nonpositive number in real mode")
        return np.log(np.asarray(v, dtype=complex))
    return np.log(v)


def evaluate(e: Expr, point: EvalPoint, bindings=None):
    """Evaluate at a single point; returns a Python float or complex."""
    v = compile_expr(e, bindings, point.mode)(point.eta, point.t)
    v = complex(v) if point.mode == "complex" else v
    if point.mode == "real":
        _check_real(v, "expression")
        return float(v)
    return v


def evaluate_grid(e: Expr, eta, t, bindings=None, mode: str = "real") -> np.ndarray:
    """Evaluate on broadcast arrays ``eta`` and ``t``."""
    eta = np.asarray(eta, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(eta <= 0):
        raise DomainError("eta must be positive")
    v = compile_expr(e, bindings, mode)(eta, t)
    shape = np.broadcast_shapes(eta.shape, t.shape)
    return np.array(np.broadcast_to(v, shape), dtype=complex if mode == "complex" else float)
