import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from hplab import expr as E
from hplab.expr import nodes as N


def close(a, b, atol=1e-12, rtol=1e-10):
    return abs(a - b) <= atol + rtol * abs(b)


def ev(e, eta, t=0.0, **b):
    return E.evaluate(e, E.EvalPoint(eta, t), b)


# ----------------------------------------------------------------- parser


def test_parse_structure():
    e = E.parse("ln(tanh(eta/2))")
    assert isinstance(e, E.Fun) and e.name == "ln"
    inner = e.arg
    assert isinstance(inner, E.Fun) and inner.name == "tanh"
    assert inner.arg == E.Mul((E.Const(0.5), E.ETA_VAR))


def test_parse_bindings_substitute_constants():
    e = E.parse("c1*ln(tanh(eta/2))+c2", {"c1": 2, "c2": 3})
    assert E.free_vars(e) == {"eta"}
    assert close(ev(e, 1.0), 2 * math.log(math.tanh(0.5)) + 3)


def test_parse_complex_euler():
    # Euler: exp(i omega t / alpha) = cos + i sin
    for omega, want in ((2, 1.0), (1, -1.0)):
        e = E.parse("exp((i*omega/alpha)*t)", {"omega": omega, "alpha": 1}, complex_mode=True)
        v = E.evaluate(e, E.EvalPoint(1.0, math.pi, "complex"))
        assert abs(v - want) <= 1e-12


def test_imaginary_unit_requires_complex_mode():
    with pytest.raises(E.ParseError):
        E.parse("i*t")


@pytest.mark.parametrize("src, offset", [("1 + * 2", 4), ("sinh(eta", 8), ("eta)", 3), ("", 0), ("2 $ 3", 2)])
def test_syntax_error_offsets(src, offset):
    with pytest.raises(E.ParseError) as info:
        E.parse(src)
    assert info.value.offset == offset
    assert info.value.expected


def test_unknown_identifier():
    with pytest.raises(E.UnknownIdentifierError):
        E.parse("foo(eta)")
    with pytest.raises(E.UnknownIdentifierError):
        E.parse("eta + q", params=set())


def test_pow_function_and_caret_agree():
    a, b = E.parse("pow(eta, 2.5)"), E.parse("eta^2.5")
    assert close(ev(a, 1.7), ev(b, 1.7))


def test_unary_minus_binds_inside_power():
    # factor := unary ("^" unary)?, so a leading minus belongs to the base
    assert close(ev(E.parse("-eta^2"), 3.0), 9.0)
    assert close(ev(E.parse("-(eta^2)"), 3.0), -9.0)


# random trees for the round trip and the calculus properties

_LEAF = st.one_of(
    st.just(E.ETA_VAR),
    st.just(E.T_VAR),
    st.floats(min_value=-3, max_value=3, allow_nan=False).map(lambda v: E.Const(round(v, 3))),
)


def _extend(children):
    safe = st.sampled_from(["sinh", "cosh", "tanh"])
    return st.one_of(
        st.tuples(children, children).map(lambda p: N.add(*p)),
        st.tuples(children, children).map(lambda p: N.mul(*p)),
        children.map(N.neg),
        st.tuples(safe, children).map(lambda p: N.fun(p[0], p[1])),
        children.map(lambda c: N.ln(N.add(E.Const(2.0), N.tanh(c)))),
        children.map(lambda c: N.sqrt(N.add(E.Const(1.0), N.mul(c, c)))),
        st.tuples(children, st.sampled_from([2.0, 3.0, -1.0])).map(
            lambda p: N.power(N.add(E.Const(1.5), N.tanh(p[0])), E.Const(p[1]))),
    )


EXPRS = st.recursive(_LEAF, _extend, max_leaves=6)
POINTS = st.tuples(st.floats(0.1, 2.0), st.floats(0.0, 1.0))


def _safe(e, eta, t):
    try:
        v = ev(e, eta, t)
    except (E.DomainError, OverflowError, ZeroDivisionError):
        return None
    return v if math.isfinite(v) and abs(v) < 1e8 else None


@given(EXPRS, POINTS)
def test_round_trip_evaluation(e, pt):
    v = _safe(e, *pt)
    assume(v is not None)
    back = E.parse(E.to_str(e))
    assert close(ev(back, *pt), v, atol=1e-11, rtol=1e-11)


@given(EXPRS)
def test_print_parse_print_fixed_point(e):
    once = E.to_str(E.parse(E.to_str(e)))
    assert E.to_str(E.parse(once)) == once


# ------------------------------------------------------------- calculus


def _fd(e, var, eta, t, h=1e-5):
    if var == "eta":
        return (ev(e, eta + h, t) - ev(e, eta - h, t)) / (2 * h)
    return (ev(e, eta, t + h) - ev(e, eta, t - h)) / (2 * h)


def test_diff_examples():
    d = E.diff(E.parse("ln(tanh(eta/2))"), "eta")
    assert close(ev(d, 1.0), 1 / math.sinh(1.0))
    assert E.simplify(E.diff(E.Const(4.2), "eta")) == E.Const(0.0)
    d2 = E.diff(E.parse("ln(sinh(eta))"), "eta")
    assert close(ev(d2, 2.0), _fd(E.parse("ln(sinh(eta))"), "eta", 2.0, 0.0), rtol=1e-6)
    assert close(ev(d2, 2.0), 1 / math.tanh(2.0))


FD_CASES = [
    "ln(tanh(eta/2))", "ln(sinh(eta))", "exp(-t)*sqrt(2 - ln(tanh(eta/2)))",
    "sinh(eta)^3/cosh(t+eta)", "eta^2.5*exp(-t^2)", "(1 + eta)^t", "tanh(eta*t) - 1/eta",
]


@pytest.mark.parametrize("src", FD_CASES)
@pytest.mark.parametrize("var", ["eta", "t"])
def test_diff_matches_finite_differences(src, var):
    e = E.parse(src)
    d = E.diff(e, var)
    rng = np.random.default_rng(hash((src, var)) % 2**32)
    for eta, t in zip(rng.uniform(0.2, 3.0, 50), rng.uniform(0.1, 2.0, 50)):
        assert close(ev(d, eta, t), _fd(e, var, eta, t), atol=1e-6, rtol=1e-6)


@settings(max_examples=40)
@given(EXPRS, EXPRS, st.floats(-2, 2), st.floats(-2, 2), POINTS)
def test_diff_linearity(e1, e2, a, b, pt):
    lhs = E.diff(N.add(N.mul(E.Const(a), e1), N.mul(E.Const(b), e2)), "eta")
    d1, d2 = E.diff(e1, "eta"), E.diff(e2, "eta")
    vals = [_safe(x, *pt) for x in (lhs, d1, d2)]
    assume(None not in vals)
    assert close(vals[0], a * vals[1] + b * vals[2], atol=1e-12 * (1 + abs(vals[1]) + abs(vals[2])), rtol=1e-12)


@settings(max_examples=40)
@given(EXPRS, EXPRS, POINTS)
def test_product_rule(e1, e2, pt):
    lhs = E.diff(N.mul(e1, e2), "eta")
    parts = [_safe(x, *pt) for x in (lhs, e1, e2, E.diff(e1, "eta"), E.diff(e2, "eta"))]
    assume(None not in parts)
    v, f, g, df, dg = parts
    scale = abs(f * dg) + abs(g * df)
    assert close(v, f * dg + g * df, atol=1e-12 * (1 + scale), rtol=1e-12)


def test_laplacian_examples():
    assert E.simplify(E.hyperbolic_laplacian(E.parse("c1*ln(tanh(eta/2)) + c2"))) == E.Const(0.0)
    assert E.simplify(E.hyperbolic_laplacian(E.parse("ln(sinh(eta))"))) == E.Const(1.0)
    v = ev(E.hyperbolic_laplacian(E.parse("eta^2")), 1.0)
    h = 1e-4

    def g(x):  # sinh(x) * d/dx x^2
        return math.sinh(x) * 2 * x

    fd = (g(1 + h) - g(1 - h)) / (2 * h) / math.sinh(1.0)
    assert close(v, fd, rtol=1e-7)
    assert close(v, 2 + 2 / math.tanh(1.0))


def test_laplacian_treats_t_as_constant():
    e = E.parse("exp(-t)*ln(sinh(eta))")
    assert close(ev(E.hyperbolic_laplacian(e), 1.3, 0.7), math.exp(-0.7))


def test_kernel_symbolic_zero_backed_by_pointwise_check():
    e = E.parse("ln(tanh(eta/2))")
    raw = E.hyperbolic_laplacian(e)
    eta = np.random.default_rng(0).uniform(0.05, 20, 100)

    def lap_fd(x, h=1e-4):
        def flux(y):
            return math.sinh(y) / math.sinh(y)  # sinh * d/dy ln tanh(y/2) == 1
        return (flux(x + h) - flux(x - h)) / (2 * h) / math.sinh(x)

    assert max(abs(lap_fd(x)) for x in eta) <= 1e-13
    assert E.simplify(raw) == E.Const(0.0)


# ------------------------------------------------------------- simplify


def test_simplify_rules():
    s = E.parse("sinh(eta)")
    assert E.simplify(E.Mul((s, E.Pow(s, E.Const(-1.0))))) == E.Const(1.0)
    x = E.parse("eta*t")
    assert E.simplify(E.Add((x, E.Neg(x)))) == E.Const(0.0)
    assert E.simplify(E.parse("2*3 + 0*eta")) == E.Const(6.0)
    assert E.simplify(E.parse("1*eta^1")) == E.ETA_VAR


@given(EXPRS, POINTS)
def test_simplify_preserves_value(e, pt):
    v = _safe(e, *pt)
    assume(v is not None)
    w = _safe(E.simplify(e), *pt)
    assert w is not None
    assert close(w, v, atol=1e-12 * max(1.0, abs(v)), rtol=1e-12)


def test_simplify_terminates_on_deep_tree():
    e = E.ETA_VAR
    for k in range(200):
        e = N.add(N.mul(e, E.Const(1.0)), E.Const(0.0))
    assert E.simplify(e) == E.ETA_VAR


# ------------------------------------------------------------- evaluate


def test_evaluate_examples():
    assert ev(E.Const(5.0), 1.0) == 5.0
    assert abs(ev(E.parse("ln(sinh(eta))"), math.asinh(1.0))) < 1e-15
    e = E.parse("exp(-t)*(c1*ln(tanh(eta/2)) + c2)^(1/n)")
    v = ev(e, 1.0, 0.0, c1=-1.0, c2=0.1, n=2.0)
    assert close(v, math.sqrt(-math.log(math.tanh(0.5)) + 0.1))


def test_domain_errors():
    with pytest.raises(E.DomainError):
        ev(E.parse("ln(eta - 5)"), 1.0)
    with pytest.raises(E.DomainError):
        ev(E.parse("sqrt(eta - 5)"), 1.0)
    with pytest.raises(E.DomainError):
        E.EvalPoint(0.0)
    with pytest.raises(E.DomainError):
        ev(E.parse("(eta - 5)^0.5"), 1.0)


def test_complex_mode_accepts_negative_log():
    v = E.evaluate(E.parse("ln(eta - 5)"), E.EvalPoint(1.0, 0.0, "complex"))
    assert close(v, cmath.log(-4.0))


def test_unbound_parameter():
    with pytest.raises(E.UnboundParameterError):
        ev(E.parse("a*eta"), 1.0)


def test_grid_evaluation_matches_scalar():
    e = E.parse("exp(-t)*sqrt(0.1 - ln(tanh(eta/2)))")
    eta = np.linspace(0.2, 5, 17)
    grid = E.evaluate_grid(e, eta, 0.3)
    np.testing.assert_allclose(grid, [ev(e, x, 0.3) for x in eta], rtol=1e-15)


def test_expressions_are_hashable_and_immutable():
    a, b = E.parse("sinh(eta)+1"), E.parse("sinh(eta) + 1")
    assert a == b and hash(a) == hash(b)
    with pytest.raises(AttributeError):
        a.args = ()
