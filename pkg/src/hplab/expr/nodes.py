"""Immutable expression nodes, smart constructors and the DSL printer."""

from __future__ import annotations

import functools
import math
from typing import Iterable, Union

Number = Union[int, float, complex]

ETA = "eta"
T = "t"

# Elementary functions of one argument; ``ml(beta, z)`` and ``cnu(nu, x)`` are
# the Mittag-Leffler function and the Bessel-type series C_nu.
UNARY_FUNCS = frozenset({"sinh", "cosh", "tanh", "ln", "exp", "sqrt"})
SPECIAL_FUNCS = frozenset({"ml", "cnu"})


class Expr:
    """Base class. Subclasses are immutable and structurally hashable."""

    __slots__ = ("_hash",)

    def _key(self) -> tuple:
        raise NotImplementedError

    def __hash__(self) -> int:
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({', '.join(map(repr, self._key()))})"

    def __str__(self) -> str:
        return to_str(self)

    # arithmetic sugar for building trees in code
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)


def _init(obj, **fields):
    for k, v in fields.items():
        object.__setattr__(obj, k, v)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Number):
        if isinstance(value, complex):
            value = complex(value)
            if value.imag == 0.0:
                value = float(value.real)
        else:
            value = float(value)
        _init(self, value=value)

    def _key(self):
        return (self.value,)

    @property
    def is_complex(self) -> bool:
        return isinstance(self.value, complex)


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        _init(self, name=str(name))

    def _key(self):
        return (self.name,)


class Add(Expr):
    __slots__ = ("args",)

    def __init__(self, args: Iterable[Expr]):
        _init(self, args=tuple(args))

    def _key(self):
        return self.args


class Mul(Expr):
    __slots__ = ("args",)

    def __init__(self, args: Iterable[Expr]):
        _init(self, args=tuple(args))

    def _key(self):
        return self.args


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: Expr):
        _init(self, base=base, exp=exp)

    def _key(self):
        return (self.base, self.exp)


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        _init(self, arg=arg)

    def _key(self):
        return (self.arg,)


class Fun(Expr):
    __slots__ = ("name", "args")

    def __init__(self, name: str, args: Iterable[Expr]):
        _init(self, name=str(name), args=tuple(args))

    def _key(self):
        return (self.name,) + self.args

    @property
    def arg(self) -> Expr:
        return self.args[-1]


ZERO = Const(0.0)
ONE = Const(1.0)
ETA_VAR = Var(ETA)
T_VAR = Var(T)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, complex)):
        return Const(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def is_const(e: Expr, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def is_int_value(v) -> bool:
    return not isinstance(v, complex) and math.isfinite(v) and float(v).is_integer()


# ---------------------------------------------------------------------------
# smart constructors: flatten, fold constants, drop neutral elements


def add(*terms: Expr) -> Expr:
    flat: list[Expr] = []
    const = 0.0
    for term in terms:
        for a in term.args if isinstance(term, Add) else (term,):
            if isinstance(a, Const):
                const += a.value
            else:
                flat.append(a)
    if const != 0.0 or not flat:
        flat.append(Const(const))
    return flat[0] if len(flat) == 1 else Add(flat)


def mul(*factors: Expr) -> Expr:
    flat: list[Expr] = []
    const = 1.0
    for f in factors:
        for a in f.args if isinstance(f, Mul) else (f,):
            if isinstance(a, Const):
                const *= a.value
            else:
                flat.append(a)
    if const == 0.0:
        return ZERO
    if const != 1.0 or not flat:
        flat.insert(0, Const(const))
    return flat[0] if len(flat) == 1 else Mul(flat)


def neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return Const(-e.value)
    return Neg(e)


def power(base: Expr, exp: Expr) -> Expr:
    """``base ^ exp``; a non-constant exponent becomes ``exp(exp * ln base)``."""
    if not isinstance(exp, Const):
        return Fun("exp", (mul(exp, Fun("ln", (base,))),))
    if exp.value == 0:
        return ONE
    if exp.value == 1:
        return base
    if isinstance(base, Const):
        b, x = base.value, exp.value
        if isinstance(b, complex) or isinstance(x, complex) or b > 0 or is_int_value(x):
            if not (b == 0 and (isinstance(x, complex) or x.real < 0)):
                return Const(b**x)
    return Pow(base, exp)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if b.value == 0:
            raise ZeroDivisionError("division by constant zero")
        return mul(a, Const(1.0 / b.value))
    return mul(a, power(b, Const(-1.0)))


def fun(name: str, *args: Expr) -> Expr:
    return Fun(name, args)


def sinh(a: Expr) -> Expr:
    return Fun("sinh", (a,))


def cosh(a: Expr) -> Expr:
    return Fun("cosh", (a,))


def tanh(a: Expr) -> Expr:
    return Fun("tanh", (a,))


def ln(a: Expr) -> Expr:
    return Fun("ln", (a,))


def exp(a: Expr) -> Expr:
    return Fun("exp", (a,))


def sqrt(a: Expr) -> Expr:
    return Fun("sqrt", (a,))


def ml(beta: float, z: Expr) -> Expr:
    return Fun("ml", (Const(beta), z))


def cnu(nu: int, x: Expr) -> Expr:
    return Fun("cnu", (Const(nu), x))


# ---------------------------------------------------------------------------
# traversal helpers


def free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, Const):
        return frozenset()
    out: set[str] = set()
    for child in children(e):
        out |= free_vars(child)
    return frozenset(out)


def depends_on(e: Expr, var: str) -> bool:
    return var in free_vars(e)


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Add, Mul, Fun)):
        return e.args
    if isinstance(e, Pow):
        return (e.base, e.exp)
    if isinstance(e, Neg):
        return (e.arg,)
    return ()


def rebuild(e: Expr, new_children) -> Expr:
    if isinstance(e, Add):
        return Add(new_children)
    if isinstance(e, Mul):
        return Mul(new_children)
    if isinstance(e, Pow):
        return Pow(*new_children)
    if isinstance(e, Neg):
        return Neg(new_children[0])
    if isinstance(e, Fun):
        return Fun(e.name, new_children)
    return e


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace variables by expressions (or numbers)."""
    mapping = {k: as_expr(v) for k, v in mapping.items()}

    def go(node: Expr) -> Expr:
        if isinstance(node, Var):
            return mapping.get(node.name, node)
        kids = children(node)
        if not kids:
            return node
        return rebuild(node, tuple(go(k) for k in kids))

    return go(e)


def node_count(e: Expr) -> int:
    return 1 + sum(node_count(c) for c in children(e))


# ---------------------------------------------------------------------------
# printer


def _fmt_real(v: float) -> str:
    s = repr(float(v))
    return f"({s})" if s.startswith("-") else s


def _fmt_const(v) -> str:
    if isinstance(v, complex):
        re_, im_ = v.real, v.imag
        im_s = f"{repr(abs(im_))}*i"
        if re_ == 0.0:
            return f"({'-' if im_ < 0 else ''}{im_s})"
        return f"({repr(re_)}{'-' if im_ < 0 else '+'}{im_s})"
    return _fmt_real(v)


def _is_atom(e: Expr) -> bool:
    if isinstance(e, (Var, Fun)):
        return True
    if isinstance(e, Const):
        return not e.is_complex and not repr(e.value).startswith("-")
    return False


def _wrap(e: Expr) -> str:
    s = to_str(e)
    if _is_atom(e) or (isinstance(e, Const) and s.startswith("(")):
        return s
    return f"({s})"


@functools.lru_cache(maxsize=200_000)
def to_str(e: Expr) -> str:
    """Render in the DSL grammar; ``parse(to_str(e))`` rebuilds ``e``."""
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        parts = []
        for k, a in enumerate(e.args):
            if k and isinstance(a, Neg):
                parts.append(" - " + _wrap(a.arg))
            elif k:
                parts.append(" + " + (f"({to_str(a)})" if isinstance(a, Add) else to_str(a)))
            else:
                parts.append(f"({to_str(a)})" if isinstance(a, Add) else to_str(a))
        return "".join(parts)
    if isinstance(e, Mul):
        return "*".join(
            f"({to_str(a)})" if isinstance(a, (Add, Neg, Mul)) else to_str(a) for a in e.args
        )
    if isinstance(e, Pow):
        return f"{_wrap(e.base)}^{_wrap(e.exp)}"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg)
    if isinstance(e, Fun):
        if e.name == "cnu" and is_const(e.args[0], 0):
            return f"c0({to_str(e.args[1])})"
        return f"{e.name}({', '.join(to_str(a) for a in e.args)})"
    raise TypeError(f"unknown node {e!r}")
