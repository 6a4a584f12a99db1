"""Finite-difference solver on a truncated radial grid with exact Dirichlet traces.

Three equations are supported, all with boundary values read from the exact
family that generated the initial data:

* porous decay      ``op[u] = lap(u^n) - u``  (classical or Caputo ``op``)
* quasilinear       ``u_t = u lap(u)``
* periodic forced   ``u_t - lam u = lap(u^n)`` (complex valued)

Schemes: explicit RK4, implicit Euler (damped Newton) and the L1 scheme for
Caputo derivatives, which reuses the implicit Euler Newton solve.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from . import expr as E
from .solutions import PERIODIC_FORCED, POROUS_DECAY, QUASILINEAR, SolutionFamily
from .timeops import CaputoHistory, Kind, TimeOperator, l1_scale

POSITIVITY_FLOOR = 1e-14
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
CFL = 0.2


class SolverError(RuntimeError):
    pass


class PositivityError(SolverError):
    def __init__(self, node: int, eta: float, t: float, value: float):
        super().__init__(f"positivity lost at node {node} (eta={eta:.6g}) at t={t:.6g}: u={value:.3g}")
        self.node, self.eta, self.t, self.value = node, eta, t, value


class MaximumPrincipleViolation(SolverError):
    def __init__(self, node: int, eta: float, t: float, value: float, bound: float):
        super().__init__(f"maximum principle violated at node {node} (eta={eta:.6g}) at t={t:.6g}: "
                         f"u={value:.6g} outside [0, {bound:.6g}]")
        self.node, self.eta, self.t, self.value, self.bound = node, eta, t, value, bound


class NewtonDivergence(SolverError):
    pass


class StabilityError(SolverError):
    pass


# ---------------------------------------------------------------------------
# grid


@dataclass(frozen=True, eq=False)
class RadialGrid:
    eta_min: float = 0.1
    eta_max: float = 8.0
    I: int = 200
    eta: np.ndarray = field(init=False, repr=False)
    h: float = field(init=False)
    sm: np.ndarray = field(init=False, repr=False)
    sp: np.ndarray = field(init=False, repr=False)
    sc: np.ndarray = field(init=False, repr=False)
    inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.eta_min > 0:
            raise ValueError("eta_min must be positive (the origin is a coordinate singularity)")
        if not self.eta_max > self.eta_min:
            raise ValueError("eta_max must exceed eta_min")
        if int(self.I) != self.I or self.I < 8:
            raise ValueError(f"need an integer node count I >= 8, got {self.I}")
        eta = np.linspace(self.eta_min, self.eta_max, int(self.I))
        h = (self.eta_max - self.eta_min) / (self.I - 1)
        sc = np.sinh(eta)
        sets = object.__setattr__
        sets(self, "eta", eta)
        sets(self, "h", h)
        sets(self, "sm", np.sinh(eta - h / 2))
        sets(self, "sp", np.sinh(eta + h / 2))
        sets(self, "sc", sc)
        sets(self, "inv", 1.0 / (sc * h * h))
        for a in (self.eta, self.sm, self.sp, self.sc, self.inv):
            a.setflags(write=False)

    def tridiagonal(self):
        """Rows ``(lower, diag, upper)`` of the discrete Laplacian at each node."""
        lower = self.inv * self.sm
        upper = self.inv * self.sp
        return lower, -(lower + upper), upper


def discrete_laplacian(g: RadialGrid, w) -> np.ndarray:
    """Conservative second-order Laplacian; boundary entries are 0 (Dirichlet nodes)."""
    w = np.ascontiguousarray(w)
    if w.shape != (g.I,):
        raise ValueError(f"expected {g.I} nodal values, got shape {w.shape}")
    if not np.iscomplexobj(w):
        w = w.astype(float, copy=False)
    return K.laplacian(w, g.sm, g.sp, g.inv, np.empty_like(w))


# ---------------------------------------------------------------------------
# problem


class Equation(enum.Enum):
    POROUS_DECAY = "porous-decay"
    QUASILINEAR = "quasilinear"
    PERIODIC_FORCED = "periodic-forced"

    @property
    def kernel_kind(self) -> int:
        return {Equation.POROUS_DECAY: K.POROUS, Equation.QUASILINEAR: K.QUASILINEAR,
                Equation.PERIODIC_FORCED: K.FORCED}[self]


_EQ_BY_SRC = {POROUS_DECAY: Equation.POROUS_DECAY, QUASILINEAR: Equation.QUASILINEAR,
              PERIODIC_FORCED: Equation.PERIODIC_FORCED}


class Scheme(enum.Enum):
    RK4 = "rk4"
    IMPLICIT_EULER = "implicit-euler"
    FRACTIONAL_L1 = "l1"


class BoundaryTrace:
    """Exact Dirichlet values at both ends, vectorized over time."""

    def __init__(self, family: SolutionFamily, grid: RadialGrid):
        ends = np.array([grid.eta[0], grid.eta[-1]])
        cplx = family.mode == "complex"
        self._spatial = []
        self._temporal = []
        for tk, sk in family.terms:
            s = np.broadcast_to(E.evaluate_grid(sk, ends, 0.0, mode=family.mode), (2,))
            self._spatial.append(np.array(s))
            self._temporal.append(E.compile_expr(tk, mode=family.mode))
        self.dtype = complex if cplx else float

    def __call__(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        out = np.zeros((ts.size, 2), dtype=self.dtype)
        for s, f in zip(self._spatial, self._temporal):
            v = np.broadcast_to(f(1.0, ts), ts.shape)
            out += np.outer(v, s)
        return out


@dataclass(eq=False)
class EvolutionProblem:
    family: SolutionFamily
    grid: RadialGrid = field(default_factory=RadialGrid)
    equation: Equation | None = None
    op: TimeOperator | None = None
    n: float | None = None

    def __post_init__(self):
        fam = self.family
        src = fam.equation.spatial
        if self.equation is None:
            if src not in _EQ_BY_SRC:
                raise ValueError(f"no solver for the equation {src!r}")
            self.equation = _EQ_BY_SRC[src]
        elif _EQ_BY_SRC.get(src) is not self.equation:
            raise ValueError(f"family {fam.name!r} solves {src!r}, not {self.equation.value}")
        if self.op is None:
            self.op = fam.equation.time
        if self.op.kind is Kind.LAGUERRE:
            raise ValueError("Laguerre-operator equations are verified by residual only, not solved")
        if self.n is None:
            self.n = fam.equation.n if fam.equation.n is not None else 1.0
        self.n = float(self.n)
        self.lam = self.op.lam if self.op.kind is Kind.SHIFTED else 0.0
        self.kind = self.equation.kernel_kind
        lo, hi = fam.validity.eta
        if not (lo <= self.grid.eta_min and self.grid.eta_max <= hi):
            raise ValueError(f"grid [{self.grid.eta_min}, {self.grid.eta_max}] leaves the validity "
                             f"interval ({lo:.6g}, {hi:.6g}) of {fam.name}")
        self.complex = fam.mode == "complex"
        self._exact = fam.exact()
        self.boundary = BoundaryTrace(fam, self.grid)
        u0 = self.exact(0.0)
        if self.needs_positivity:
            k = int(np.argmin(u0))
            if not u0[k] > POSITIVITY_FLOOR:
                raise PositivityError(k, float(self.grid.eta[k]), 0.0, float(u0[k]))

    @property
    def needs_positivity(self) -> bool:
        return not self.complex

    @property
    def t_limit(self) -> float:
        return self.family.validity.t[1]

    def exact(self, t: float) -> np.ndarray:
        v = np.broadcast_to(self._exact(self.grid.eta, t), self.grid.eta.shape)
        return np.array(v, dtype=complex if self.complex else float)

    def rhs(self, u: np.ndarray) -> np.ndarray:
        g = self.grid
        return K.rhs(self.kind, u, self.n, self.lam, g.sm, g.sp, g.inv, np.empty_like(u))

    def stable_dt(self, u: np.ndarray) -> float:
        """Explicit-step bound ``CFL h^2 / (effective diffusivity)``."""
        m = float(np.max(np.abs(u)))
        if self.equation is Equation.QUASILINEAR:
            d = m
        else:
            d = self.n * m ** (self.n - 1.0)
        return math.inf if d == 0 else CFL * self.grid.h**2 / d


@dataclass(frozen=True)
class State:
    t: float
    u: np.ndarray


# ---------------------------------------------------------------------------
# steps


def _check_state(p: EvolutionProblem, u: np.ndarray, t: float, bound: float | None = None) -> None:
    if not np.all(np.isfinite(u)):
        k = int(np.argmax(~np.isfinite(u)))
        raise SolverError(f"non-finite value at node {k} (eta={p.grid.eta[k]:.6g}) at t={t:.6g}")
    if p.needs_positivity:
        k = int(np.argmin(u))
        if not u[k] >= POSITIVITY_FLOOR:
            raise PositivityError(k, float(p.grid.eta[k]), t, float(u[k]))
    if bound is not None:
        k = int(np.argmax(u))
        if u[k] > bound:
            raise MaximumPrincipleViolation(k, float(p.grid.eta[k]), t, float(u[k]), bound)


def _rk4(p: EvolutionProblem, u: np.ndarray, dt: float, bc: np.ndarray) -> np.ndarray:
    g = p.grid
    return K.rk4_step(p.kind, u, p.n, p.lam, dt, bc, g.sm, g.sp, g.inv)


def _jacobian(p: EvolutionProblem, v: np.ndarray):
    """Tridiagonal ``dF/dv`` of the discrete right-hand side (all nodes)."""
    lo, di, up = p.grid.tridiagonal()
    if p.equation is Equation.QUASILINEAR:
        lap = discrete_laplacian(p.grid, v)
        return v * lo, v * di + lap, v * up
    dv = p.n * v ** (p.n - 1.0)
    lower = np.zeros_like(v)
    upper = np.zeros_like(v)
    lower[1:] = lo[1:] * dv[:-1]
    upper[:-1] = up[:-1] * dv[1:]
    diag = di * dv + (-1.0 if p.equation is Equation.POROUS_DECAY else p.lam)
    return lower, diag, upper


def newton_implicit(p: EvolutionProblem, base: np.ndarray, tau: float, bc_new, t_new: float,
                    guess: np.ndarray | None = None) -> np.ndarray:
    """Solve ``v - base - tau F(v) = 0`` on interior nodes with boundary values ``bc_new``."""
    v = np.array(base if guess is None else guess, copy=True)
    v[0], v[-1] = bc_new
    sl = slice(1, -1)

    def residual(w):
        return (w - base - tau * p.rhs(w))[sl]

    r = residual(v)
    rn = float(np.max(np.abs(r)))
    for _ in range(NEWTON_MAX_ITER):
        lo, di, up = _jacobian(p, v)
        a = -tau * lo[sl]
        b = 1.0 - tau * di[sl]
        c = -tau * up[sl]
        a[0] = 0.0
        c[-1] = 0.0
        if p.complex:
            a, b, c = (x.astype(complex) for x in (a, b, c))
            rhs = -r.astype(complex)
        else:
            rhs = -r
        delta = K.tridiag_solve(np.ascontiguousarray(a), np.ascontiguousarray(b),
                                np.ascontiguousarray(c), np.ascontiguousarray(rhs))
        step = 1.0
        while True:
            trial = v.copy()
            trial[sl] += step * delta
            ok = not p.needs_positivity or np.min(trial[sl]) > 0
            if ok:
                with np.errstate(all="ignore"):
                    r_trial = residual(trial)
                rn_trial = float(np.max(np.abs(r_trial)))
                if np.isfinite(rn_trial) and (rn_trial <= rn or step < 1e-3):
                    break
            step *= 0.5
            if step < 1e-8:
                raise NewtonDivergence(f"line search failed at t={t_new:.6g}")
        v, r, rn = trial, r_trial, rn_trial
        scale = max(1.0, float(np.max(np.abs(v))))
        if step * float(np.max(np.abs(delta))) <= NEWTON_TOL * scale:
            return v
    raise NewtonDivergence(f"Newton did not converge in {NEWTON_MAX_ITER} iterations at t={t_new:.6g} "
                           f"(residual {rn:.3g})")


def step_classical(p: EvolutionProblem, state: State, dt: float, scheme: Scheme = Scheme.RK4,
                   bc: np.ndarray | None = None) -> State:
    """One explicit RK4 or implicit Euler step.

    ``bc`` optionally supplies the boundary values at ``t``, ``t + dt/2`` and
    ``t + dt`` as a (3, 2) array; otherwise they are evaluated here.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    scheme = Scheme(scheme)
    t = state.t
    if bc is None:
        bc = p.boundary([t, t + dt / 2, t + dt])
    if scheme is Scheme.RK4:
        lim = p.stable_dt(state.u)
        if dt > lim * (1 + 1e-12):
            raise StabilityError(f"dt={dt:.3g} exceeds the explicit bound {lim:.3g} at t={t:.6g}")
        u = _rk4(p, state.u, dt, np.ascontiguousarray(bc))
    elif scheme is Scheme.IMPLICIT_EULER:
        u = newton_implicit(p, state.u, dt, bc[2], t + dt)
    else:
        raise ValueError("use step_fractional for the L1 scheme")
    return State(t + dt, u)


def step_fractional(p: EvolutionProblem, history: CaputoHistory, dt: float, bc_new=None) -> State:
    """One L1 step: ``a [(v - u^{m-1}) + H] = F(v)`` with ``a = dt^-beta / Gamma(2-beta)``.

    ``history`` holds ``u^0 .. u^{m-1}`` and receives ``v``.
    """
    if p.op.kind is not Kind.CAPUTO:
        raise ValueError("the L1 scheme needs a Caputo operator")
    if not math.isclose(dt, history.dt, rel_tol=0, abs_tol=1e-15 * max(1.0, dt)):
        raise ValueError("L1 needs a uniform time step")
    m = len(history)
    if m < 1:
        raise ValueError("history must contain the initial state")
    t_new = m * dt
    if bc_new is None:
        bc_new = p.boundary([t_new])[0]
    prev = history.values[m - 1]
    base = prev - history.memory(1)
    tau = 1.0 / l1_scale(history.beta, dt)
    v = newton_implicit(p, base, tau, bc_new, t_new, guess=prev)
    history.append(v)
    return State(t_new, v)


# ---------------------------------------------------------------------------
# runs


@dataclass(frozen=True)
class RunSpec:
    t_end: float
    scheme: Scheme = Scheme.RK4
    dt: float | None = None
    snapshots: tuple[float, ...] = ()
    check_max_principle: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class Snapshot:
    t: float
    eta: np.ndarray
    u: np.ndarray
    exact: np.ndarray

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.u - self.exact)

    @property
    def linf(self) -> float:
        return float(np.max(self.abs_err))

    @property
    def l2(self) -> float:
        e = self.abs_err
        h = self.eta[1] - self.eta[0]
        return float(math.sqrt(h * float(np.sum(e * e))))

    @property
    def rel_linf(self) -> float:
        return self.linf / float(np.max(np.abs(self.exact)))

    def rows(self):
        for x, u, ex, err in zip(self.eta, self.u, self.exact, self.abs_err):
            u, ex = complex(u), complex(ex)
            yield float(x), u.real, u.imag, ex.real, ex.imag, float(err)


@dataclass(frozen=True)
class RunResult:
    snapshots: tuple[Snapshot, ...]
    steps: int
    dt: float
    substeps: int
    wall_per_step: float
    scheme: Scheme

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    @property
    def linf(self) -> float:
        return self.final.linf

    @property
    def l2(self) -> float:
        return self.final.l2

    @property
    def rel_linf(self) -> float:
        return self.final.rel_linf

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "dt": self.dt,
            "steps": self.steps,
            "substeps": self.substeps,
            "errors": [{"t": s.t, "linf": s.linf, "l2": s.l2, "rel_linf": s.rel_linf}
                       for s in self.snapshots],
        }


def default_dt(p: EvolutionProblem, t_end: float, scheme: Scheme) -> float:
    """RK4: the explicit bound at t=0; implicit schemes: ``h^2``-free default of 1e-3.

    The bound is rounded down to a power of ten when that divides ``t_end``,
    so round snapshot times land on the step grid.
    """
    if t_end == 0:
        return 1.0
    if scheme is Scheme.RK4:
        lim = p.stable_dt(p.exact(0.0))
    else:
        lim = 1e-3
    tidy = 10.0 ** math.floor(math.log10(lim))
    k = round(t_end / tidy)
    if abs(k * tidy - t_end) <= 1e-9 * max(1.0, t_end):
        return t_end / k
    return t_end / math.ceil(t_end / lim - 1e-9)


def _steps_for(t: float, dt: float) -> int:
    k = round(t / dt)
    if abs(k * dt - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"time {t} is not a multiple of dt={dt}")
    return int(k)


def run(p: EvolutionProblem, spec: RunSpec) -> RunResult:
    """Integrate to ``spec.t_end`` and compare snapshots to the exact family.

    For RK4, a step that would exceed the explicit bound is split into equal
    substeps (the bound is recomputed before every step).
    """
    scheme = spec.scheme
    if scheme is Scheme.FRACTIONAL_L1 and p.op.kind is not Kind.CAPUTO:
        raise ValueError("the L1 scheme needs a Caputo operator")
    if p.op.kind is Kind.CAPUTO and p.op.beta != 1.0 and scheme is not Scheme.FRACTIONAL_L1:
        raise ValueError("Caputo problems need the L1 scheme")
    if spec.t_end >= p.t_limit:
        raise ValueError(f"t-end beyond blow-up time: t-end {spec.t_end}, blow-up at {p.t_limit}")
    dt = spec.dt if spec.dt is not None else default_dt(p, spec.t_end, scheme)
    n_steps = _steps_for(spec.t_end, dt) if spec.t_end > 0 else 0
    snap_times = sorted(set(spec.snapshots) | {spec.t_end})
    snap_steps = {_steps_for(s, dt): s for s in snap_times if s <= spec.t_end} if n_steps else {0: 0.0}

    u = p.exact(0.0)
    bound = None
    if spec.check_max_principle and p.equation is Equation.POROUS_DECAY:
        bound = float(np.max(u))
    snaps = []
    if 0 in snap_steps:
        snaps.append(Snapshot(0.0, p.grid.eta, u.copy(), u.copy()))
    history = None
    if scheme is Scheme.FRACTIONAL_L1:
        history = CaputoHistory(dt, p.op.beta, p.grid.I)
        history.append(u)
    substeps_total = 0
    chunk = 1024
    bc_block = rk_block = None
    rk_base = rk_m = 0
    start = time.perf_counter()
    for k in range(n_steps):
        t = k * dt
        if scheme is Scheme.FRACTIONAL_L1:
            if k % chunk == 0:
                bc_block = p.boundary(np.arange(k + 1, min(k + chunk, n_steps) + 1) * dt)
            u = step_fractional(p, history, dt, bc_block[k % chunk]).u
            substeps_total += 1
        elif scheme is Scheme.IMPLICIT_EULER:
            if k % chunk == 0:
                bc_block = p.boundary(np.arange(k + 1, min(k + chunk, n_steps) + 1) * dt)
            u = newton_implicit(p, u, dt, bc_block[k % chunk], t + dt)
            substeps_total += 1
        else:
            lim = p.stable_dt(u)
            m = 1 if dt <= lim * (1 + 1e-12) else math.ceil(dt / lim)
            if rk_block is None or m != rk_m or k - rk_base >= len(rk_block):
                # boundary values for a block of outer steps with m substeps each
                kk = np.arange(k, min(k + max(1, chunk // m), n_steps))
                sub = dt / m
                offs = (np.arange(m)[:, None] + np.array([0.0, 0.5, 1.0])) * sub
                ts = (kk[:, None, None] * dt + offs[None]).ravel()
                rk_block = p.boundary(ts).reshape(len(kk), m, 3, 2)
                rk_base, rk_m = k, m
            bcs = rk_block[k - rk_base]
            sub = dt / m
            for j in range(m):
                u = _rk4(p, u, sub, bcs[j])
            substeps_total += m
        t_new = (k + 1) * dt
        if not p.complex:
            _check_state(p, u, t_new, None if bound is None else bound * (1 + 1e-12) + 1e-14)
        elif not np.all(np.isfinite(u)):
            raise SolverError(f"non-finite value at t={t_new:.6g}")
        if (k + 1) in snap_steps:
            snaps.append(Snapshot(snap_steps[k + 1], p.grid.eta, u.copy(), p.exact(snap_steps[k + 1])))
    wall = (time.perf_counter() - start) / max(1, n_steps)
    return RunResult(tuple(snaps), n_steps, dt, substeps_total, wall, scheme)


def measure_fractional_cost(p: EvolutionProblem, step_counts: Sequence[int], t_end: float = 1.0):
    """Wall time of L1 runs for each step count; returns ``(counts, seconds)``."""
    secs = []
    for n in step_counts:
        spec = RunSpec(t_end, Scheme.FRACTIONAL_L1, dt=t_end / n, check_max_principle=False)
        t0 = time.perf_counter()
        run(p, spec)
        secs.append(time.perf_counter() - t0)
    return np.asarray(step_counts, dtype=float), np.asarray(secs)
