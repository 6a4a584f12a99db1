import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from hplab import expr as E, solutions as S, specfun, verify as V
from hplab.timeops import TimeOperator


def bisect_root(f, lo, hi, tol=1e-15):
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- operators


def test_operator_spec_parses_and_expands():
    op = S.OperatorSpec(TimeOperator.classical(), S.POROUS_DECAY, 2.0)
    u = E.parse("ln(sinh(eta))")
    f = op.apply_spatial(u)
    x = 1.3
    want = E.evaluate(E.hyperbolic_laplacian(E.parse("ln(sinh(eta))^2")), E.EvalPoint(x)) - math.log(math.sinh(x))
    assert E.evaluate(f, E.EvalPoint(x)) == pytest.approx(want, rel=1e-13)
    assert "u^2" in op.src


def test_operator_spec_rejects_bad_text():
    with pytest.raises(E.ParseError):
        S.OperatorSpec(TimeOperator.classical(), "lap(u^n) -", 2.0)


# ---------------------------------------------------------------- examples


def test_classical_example():
    fam = S.family_theorem21(TimeOperator.classical(), 2, -1, 0)
    assert fam.validity.eta == (0.0, math.inf)
    u = fam.exact()
    for eta, t in [(0.3, 0.0), (1.0, 0.7), (4.0, 2.0)]:
        assert u(eta, t) == pytest.approx(math.exp(-t) * math.sqrt(-math.log(math.tanh(eta / 2))), rel=1e-14)
    assert V.residual(fam).max_abs_residual <= 1e-10


def test_caputo_example():
    fam = S.family_theorem21(TimeOperator.caputo(0.5), 3, -1, 0)
    u = fam.exact()
    eta, t = 0.8, 1.3
    want = specfun.mittag_leffler(0.5, -math.sqrt(t)) * (-math.log(math.tanh(eta / 2))) ** (1 / 3)
    assert u(eta, t) == pytest.approx(want, rel=1e-12)
    assert V.residual(fam).max_abs_residual <= 1e-9


def test_constant_in_eta_member():
    fam = S.family_theorem21(TimeOperator.classical(), 2, 0, 1)
    u = fam.exact()
    assert np.allclose(u(np.array([0.2, 1.0, 5.0]), 0.5), math.exp(-0.5), rtol=1e-15)
    assert V.residual(fam).max_abs_residual == 0.0


def test_blowup_example():
    fam = S.family_theorem22(TimeOperator.classical(), t0=1, c1=1, c2=0)
    u = fam.exact()
    eta, t = 1.1, 0.4
    want = (math.log(math.sinh(eta)) + math.log(math.tanh(eta / 2))) / (1 - t)
    assert u(eta, t) == pytest.approx(want, rel=1e-14)
    assert fam.validity.t == (0.0, 1.0)


def test_theorem22_pure_log_sinh():
    fam = S.family_theorem22(TimeOperator.classical(), t0=2, c1=0, c2=0)
    assert V.residual(fam).max_abs_residual <= 1e-11
    assert fam.exact()(1.5, 1.0) == pytest.approx(math.log(math.sinh(1.5)), rel=1e-14)


def test_static_solution_from_supplied_profiles():
    fam = S.family_theorem22(TimeOperator.classical(), "0", "2", "-3")
    assert fam.validity.t[1] == math.inf
    assert V.residual(fam).max_abs_residual == 0.0


def test_supplied_profiles_are_checked():
    with pytest.raises(ValueError):
        S.family_theorem22(TimeOperator.classical(), "1/(1-t)", "1", "0")
    with pytest.raises(ValueError):
        S.family_theorem22(TimeOperator.classical(), "0", "eta", "0")
    with pytest.raises(ValueError):
        S.family_theorem22(TimeOperator.classical(), "0", "1")


def test_supplied_blowup_profiles_match_closed_form():
    fam = S.family_theorem22(TimeOperator.classical(), "1/(1-t)", "0.5/(1-t)", "0.25/(1-t)")
    ref = S.build_family("theorem22-general")
    eta = np.linspace(0.2, 5, 9)
    np.testing.assert_allclose(fam.exact()(eta, 0.3), ref.exact()(eta, 0.3), rtol=1e-14)
    assert fam.validity.t == (0.0, 1.0)


def test_periodic_family_complex():
    fam = S.build_family("theorem21-periodic")
    assert fam.mode == "complex"
    assert fam.equation.spatial == S.PERIODIC_FORCED
    u = fam.exact()
    v = u(np.array([0.5]), math.pi / 2)  # omega t / alpha = pi
    base = math.sqrt(-math.log(math.tanh(0.25)) + 0.1)
    assert abs(v[0] - (-base)) <= 1e-12
    assert V.residual(fam).max_abs_residual <= 1e-10


def test_periodic_family_restrictions():
    with pytest.raises(ValueError):
        S.family_theorem21(TimeOperator.classical(), 2.5, -1, 0.1, omega=2, alpha=1)
    with pytest.raises(ValueError):
        S.family_theorem21(TimeOperator.classical(), 2, -1, 0.1, omega=2, alpha=0)


def test_laguerre_catalog_and_literal():
    fam = S.build_family("theorem21-laguerre")
    assert V.residual(fam).max_abs_residual <= 1e-9
    lit = S.build_family("theorem21-laguerre-literal")
    assert V.residual(lit).max_abs_residual > 1.0
    assert lit.note


def test_laguerre_noninteger_n_capped_at_first_zero():
    fam = S.family_theorem21(TimeOperator.laguerre(), 2.5, -1, 0.1)
    assert fam.validity.t[1] == pytest.approx(S.C0_NEG_FIRST_ZERO)
    # c0(-t) = J0(2 sqrt t) vanishes there
    z = S.C0_NEG_FIRST_ZERO
    assert abs(special.j0(2 * math.sqrt(z))) < 1e-15


@pytest.mark.parametrize("n", [1.0, 0.5, -2.0])
def test_n_must_exceed_one(n):
    with pytest.raises(ValueError):
        S.family_theorem21(TimeOperator.classical(), n, -1, 0.1)


# ---------------------------------------------------------------- validity


def test_validity_examples():
    assert S.positivity_interval(-1, 0) == (0.0, math.inf)
    assert S.positivity_interval(1, 0) == (0.0, 0.0)
    with pytest.raises(S.EmptyValidityRegion):
        S.family_theorem21(TimeOperator.classical(), 2, 1, 0)


def test_validity_bisection_oracle():
    lo, hi = S.positivity_interval(1, 1)
    root = bisect_root(lambda x: math.log(math.tanh(x / 2)) + 1, 1e-6, 20.0)
    assert lo == pytest.approx(root, rel=1e-12)
    assert lo == pytest.approx(2 * math.atanh(math.exp(-1)), rel=1e-14)
    assert hi == math.inf


@given(st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3), st.floats(-3, 3))
def test_validity_interval_is_exact_sign_region(c1, c2):
    lo, hi = S.positivity_interval(c1, c2)
    eta = np.geomspace(1e-3, 30, 400)
    val = c1 * specfun.log_tanh_half(eta) + c2
    inside = (eta > lo) & (eta < hi)
    margin = np.abs(val) > 1e-9
    assert np.all(val[inside & margin] > 0)
    assert np.all(val[~inside & margin] <= 0)


def test_validity_region_function():
    fam = S.build_family("theorem22-blowup")
    assert S.validity_region(fam) == ((0.0, math.inf), (0.0, 1.0))


# ---------------------------------------------------------------- properties


@pytest.mark.parametrize("op", [TimeOperator.classical(), TimeOperator.caputo(0.4), TimeOperator.caputo(0.8)])
@pytest.mark.parametrize("ncc", [(2, -1, 0.1), (3, -1, 1)])
def test_monotone_decay(op, ncc):
    fam = S.family_theorem21(op, *ncc)
    u = fam.exact()
    ts = np.linspace(0, 5, 60)
    for eta in (0.1, 0.7, 3.0):
        v = np.array([float(u(eta, t)) for t in ts])
        assert np.all(np.diff(v) <= 1e-15)


def test_blowup_amplitude_scaling():
    fam = S.build_family("theorem22-blowup")
    u = fam.exact()
    eta = np.geomspace(0.05, 10, 40)

    def amp(t):
        return np.max(np.abs(u(eta, t)))

    for d in np.geomspace(0.1, 0.002, 8):
        assert amp(1 - d / 2) / amp(1 - d) == pytest.approx(2.0, rel=0.01)


# ---------------------------------------------------------------- catalog and JSON


def test_catalog_gate():
    cat = S.catalog()
    assert [f.name for f in cat] == list(S.CATALOG_NAMES)
    assert max(cat.residuals) <= 1e-9
    assert cat["theorem22-blowup"].name == "theorem22-blowup"
    with pytest.raises(KeyError):
        cat["nope"]


def test_catalog_json_schema():
    doc = json.loads(S.catalog().to_json())
    for entry in doc:
        assert set(entry) == {"name", "params", "spatial_src", "temporal_src", "equation_src", "validity"}
        assert set(entry["validity"]) == {"eta", "t"}


def test_family_sources_reparse():
    for name in S.CATALOG_NAMES:
        fam = S.build_family(name)
        mode = fam.mode == "complex"
        for src in fam.spatial_src.split("; ") + fam.temporal_src.split("; "):
            E.parse(src, complex_mode=mode)


def test_build_family_errors():
    with pytest.raises(KeyError):
        S.build_family("theorem99")
    with pytest.raises(ValueError):
        S.build_family("theorem22-blowup", beta=0.5)


def test_perturbations_break_the_residual():
    for name in S.CATALOG_NAMES:
        fam = S.build_family(name)
        assert fam.perturbations()
        for which in fam.perturbations():
            bad = fam.perturbed(which)
            assert bad.name.endswith(which)
            assert V.residual(bad).max_abs_residual > 1e-6
    with pytest.raises(KeyError):
        S.build_family("theorem21-classical").perturbed("c1")


def test_families_are_immutable():
    fam = S.build_family("theorem21-classical")
    with pytest.raises(AttributeError):
        fam.name = "x"
