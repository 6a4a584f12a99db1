"""Time operators: classical, Caputo, Laguerre and shifted classical.

Each operator has a symbolic action on t-profiles (used by the residual
engine) and, where it makes sense, a discrete counterpart used by the solver:
L1 weights and memory sums for Caputo, a regularized stepper for the
Laguerre derivative ``d/dt t d/dt``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import expr as E
from ._kernels import l1_memory
from .expr import nodes as N


class UnsupportedCaputoForm(ValueError):
    """The Caputo table has no closed form for this t-profile."""


class Kind(enum.Enum):
    CLASSICAL = "classical"
    CAPUTO = "caputo"
    LAGUERRE = "laguerre"
    SHIFTED = "shifted"


@dataclass(frozen=True)
class TimeOperator:
    kind: Kind
    beta: float | None = None
    lam: complex | None = None

    def __post_init__(self):
        if self.kind is Kind.CAPUTO:
            if self.beta is None or not (0.0 < self.beta <= 1.0):
                raise ValueError(f"Caputo order must lie in (0, 1], got {self.beta}")
        if self.kind is Kind.SHIFTED and self.lam is None:
            raise ValueError("shifted classical operator needs lam")

    @classmethod
    def classical(cls) -> "TimeOperator":
        return cls(Kind.CLASSICAL)

    @classmethod
    def caputo(cls, beta: float) -> "TimeOperator":
        return cls(Kind.CAPUTO, beta=float(beta))

    @classmethod
    def laguerre(cls) -> "TimeOperator":
        return cls(Kind.LAGUERRE)

    @classmethod
    def shifted(cls, lam: complex) -> "TimeOperator":
        """``d/dt - lam``; the periodic family uses ``lam = i omega / alpha``."""
        return cls(Kind.SHIFTED, lam=complex(lam))

    @property
    def label(self) -> str:
        if self.kind is Kind.CAPUTO:
            return f"caputo(beta={self.beta:g})"
        if self.kind is Kind.SHIFTED:
            return f"shifted(lam={self.lam})"
        return self.kind.value

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind.value}
        if self.beta is not None:
            d["beta"] = self.beta
        if self.lam is not None:
            d["lam"] = [self.lam.real, self.lam.imag]
        return d


# ---------------------------------------------------------------------------
# symbolic action


def apply_symbolic(op: TimeOperator, f: E.Expr) -> E.Expr:
    """Apply ``op`` to a t-profile ``f`` (any expression; eta is a constant)."""
    t = N.T
    if op.kind is Kind.CLASSICAL or (op.kind is Kind.CAPUTO and op.beta == 1.0):
        return E.simplify(E.diff(f, t))
    if op.kind is Kind.LAGUERRE:
        return E.simplify(E.diff(N.mul(N.T_VAR, E.diff(f, t)), t))
    if op.kind is Kind.SHIFTED:
        return E.simplify(N.add(E.diff(f, t), N.mul(N.Const(-op.lam), f)))
    return E.simplify(_caputo(f, op.beta))


def _monomial(e: E.Expr):
    """Return ``(coef, power)`` if ``e == coef * t^power``, else None."""
    if isinstance(e, E.Var) and e.name == N.T:
        return 1.0, 1.0
    if isinstance(e, E.Pow) and isinstance(e.base, E.Var) and e.base.name == N.T and isinstance(e.exp, E.Const):
        return 1.0, e.exp.value
    if isinstance(e, E.Fun) and e.name == "exp":
        # exp(p * ln t)
        a = e.arg
        if isinstance(a, E.Mul) and len(a.args) == 2 and isinstance(a.args[0], E.Const):
            inner = a.args[1]
            if isinstance(inner, E.Fun) and inner.name == "ln" and inner.arg == N.T_VAR:
                return 1.0, a.args[0].value
    if isinstance(e, E.Neg):
        m = _monomial(e.arg)
        return None if m is None else (-m[0], m[1])
    if isinstance(e, E.Mul):
        coef = 1.0
        rest = []
        for a in e.args:
            if isinstance(a, E.Const):
                coef *= a.value
            else:
                rest.append(a)
        if len(rest) == 1:
            m = _monomial(rest[0])
            return None if m is None else (coef * m[0], m[1])
    return None


def _caputo(f: E.Expr, beta: float) -> E.Expr:
    if not N.depends_on(f, N.T):
        return N.ZERO
    if isinstance(f, E.Add):
        return N.add(*(_caputo(a, beta) for a in f.args))
    if isinstance(f, E.Neg):
        return N.neg(_caputo(f.arg, beta))
    if isinstance(f, E.Mul):
        dep = [a for a in f.args if N.depends_on(a, N.T)]
        if len(dep) == 1:
            rest = [a for a in f.args if not N.depends_on(a, N.T)]
            return N.mul(*rest, _caputo(dep[0], beta))
    m = _monomial(f)
    if m is not None:
        coef, p = m
        if not (isinstance(p, float) and p > 0):
            raise UnsupportedCaputoForm(f"Caputo of t^{p} needs a positive power")
        g = math.gamma(p + 1.0) / math.gamma(p + 1.0 - beta)
        return N.mul(N.Const(coef * g), N.power(N.T_VAR, N.Const(p - beta)))
    if isinstance(f, E.Fun) and f.name == "ml":
        b = f.args[0].value
        m = _monomial(f.args[1])
        if m is not None and b == beta and m[1] == beta:
            # D^beta E_beta(a t^beta) = a E_beta(a t^beta)
            return N.mul(N.Const(m[0]), f)
    raise UnsupportedCaputoForm(f"no closed-form Caputo derivative for {E.to_str(f)!r}")


# ---------------------------------------------------------------------------
# L1 scheme


def caputo_l1_weights(beta: float, n: int) -> np.ndarray:
    """``b_j = (j+1)^(1-beta) - j^(1-beta)`` for ``j = 0..n-1`` (unscaled)."""
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if n < 1:
        raise ValueError("need at least one weight")
    if beta == 1.0:
        # backward difference
        b = np.zeros(n)
        b[0] = 1.0
        return b
    j = np.arange(n + 1, dtype=float)
    p = j ** (1.0 - beta)
    return np.diff(p)


def l1_scale(beta: float, dt: float) -> float:
    return dt ** (-beta) / math.gamma(2.0 - beta)


@dataclass
class CaputoHistory:
    """Past states ``u^0..u^n`` on a uniform time grid (single writer)."""

    dt: float
    beta: float
    size: int
    _buf: np.ndarray = field(init=False, repr=False)
    _count: int = field(default=0, init=False)
    _weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        self._buf = np.empty((16, self.size))
        self._weights = caputo_l1_weights(self.beta, 16)

    def __len__(self) -> int:
        return self._count

    @property
    def values(self) -> np.ndarray:
        return self._buf[: self._count]

    def append(self, u) -> None:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.size,):
            raise ValueError(f"state has shape {u.shape}, expected ({self.size},)")
        if self._count == len(self._buf):
            grown = np.empty((2 * len(self._buf), self.size))
            grown[: self._count] = self._buf[: self._count]
            self._buf = grown
        self._buf[self._count] = u
        self._count += 1

    def weights(self, n: int) -> np.ndarray:
        if len(self._weights) < n:
            self._weights = caputo_l1_weights(self.beta, max(n, 2 * len(self._weights)))
        return self._weights[:n]

    def memory(self, j0: int = 1) -> np.ndarray:
        """``sum_{j=j0}^{m-1} b_j (u^{m-j} - u^{m-j-1})`` where ``m = len(self)``.

        With ``j0 = 1`` this is the known part of the L1 sum for the next,
        not yet appended, level ``m``.
        """
        m = self._count
        out = np.zeros(self.size)
        if m - 1 >= j0:
            l1_memory(self.weights(m), self.values, m, j0, out)
        return out


def caputo_apply_discrete(h: CaputoHistory) -> np.ndarray:
    """L1 approximation of the Caputo derivative at the newest level."""
    n = len(h) - 1
    if n < 1:
        raise ValueError("need at least two levels in the history")
    out = np.zeros(h.size)
    l1_memory(h.weights(n), h.values, n, 0, out)
    return l1_scale(h.beta, h.dt) * out


# ---------------------------------------------------------------------------
# Laguerre derivative: d/dt (t du/dt) = rhs


@dataclass(frozen=True)
class LaguerreState:
    t: float
    u: np.ndarray
    w: np.ndarray  # t * du/dt


_OVERFLOW_GUARD = 1e150

Rhs = Union[Callable[[float, np.ndarray], np.ndarray], float, np.ndarray]


def laguerre_step(state: LaguerreState, rhs: Rhs, dt: float) -> LaguerreState:
    """Advance ``u' = w/t, w' = rhs(t, u)`` by one RK4 step.

    From ``t = 0`` the singular ``1/t`` is avoided: bounded ``u'`` forces
    ``w(0) = 0``, and the state jumps to ``t = dt`` with
    ``u(dt) = u(0) + rhs(0) dt``, ``w(dt) = rhs(0) dt``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if state.t < 0:
        raise ValueError("Laguerre stepping needs t >= 0")
    f = rhs if callable(rhs) else (lambda t, u, _c=np.asarray(rhs, dtype=float): np.broadcast_to(_c, np.shape(u)))
    u0 = np.asarray(state.u, dtype=float)
    if state.t == 0.0:
        r0 = np.asarray(f(0.0, u0), dtype=float)
        return LaguerreState(dt, u0 + r0 * dt, r0 * dt)

    def deriv(t, u, w):
        du = w / t
        if np.any(np.abs(du) > _OVERFLOW_GUARD):
            raise OverflowError(f"|w/t| exceeds the overflow guard at t={t}")
        return du, np.asarray(f(t, u), dtype=float)

    t, u, w = state.t, u0, np.asarray(state.w, dtype=float)
    k1u, k1w = deriv(t, u, w)
    k2u, k2w = deriv(t + dt / 2, u + dt / 2 * k1u, w + dt / 2 * k1w)
    k3u, k3w = deriv(t + dt / 2, u + dt / 2 * k2u, w + dt / 2 * k2w)
    k4u, k4w = deriv(t + dt, u + dt * k3u, w + dt * k3w)
    return LaguerreState(
        t + dt,
        u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u),
        w + dt / 6 * (k1w + 2 * k2w + 2 * k3w + k4w),
    )
