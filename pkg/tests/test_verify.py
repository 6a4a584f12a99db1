import json
import math

import numpy as np
import pytest

from hplab import expr as E, solutions as S, verify as V
from hplab.timeops import TimeOperator


def test_residual_examples():
    fam = S.family_theorem21(TimeOperator.classical(), 2, -1, 0.1)
    assert V.residual(fam).max_abs_residual <= 1e-10
    per = S.family_theorem21(TimeOperator.classical(), 2, -1, 0.1, omega=2, alpha=1)
    assert V.residual(per).max_abs_residual <= 1e-10


def test_temporal_offset_control():
    # c2 -> c2 + 0.1 in the temporal part only
    fam = S.build_family("theorem21-classical").perturbed("offset")
    assert V.residual(fam).max_abs_residual > 1e-2


def test_report_schema_and_invariants():
    rep = V.residual(S.build_family("theorem22-general"))
    d = rep.to_dict()
    assert {"family", "equation", "grid", "max_abs_residual", "mean_abs_residual", "argmax"} <= set(d)
    assert len(d["grid"]["eta"]) == 40 and len(d["grid"]["t"]) == 40
    assert rep.max_abs_residual >= rep.mean_abs_residual >= 0
    json.dumps(d)


def test_sample_grid_respects_guards():
    fam = S.build_family("theorem22-blowup")
    eta, t = V.sample_grid(fam)
    assert eta[0] >= V.ETA_FLOOR and t[-1] <= 1.0 * (1 - V.T0_GUARD) + 1e-15
    narrow = S.family_theorem21(TimeOperator.classical(), 2, 1, 1)  # eta > 2 atanh(1/e)
    eta, _ = V.sample_grid(narrow)
    assert eta[0] > narrow.validity.eta[0]


@pytest.mark.parametrize("name", S.CATALOG_NAMES)
def test_negative_controls_dominate(name):
    fam = S.build_family(name)
    base = V.residual(fam).max_abs_residual
    controls = V.negative_controls(fam)
    assert controls
    for which, rep in controls.items():
        assert rep.max_abs_residual > 1e-6, which
        assert rep.max_abs_residual >= 1e3 * base, which


def test_caputo_quadrature_matches_power_law():
    beta = 0.4
    for t in (0.5, 1.0, 2.0):
        want = math.gamma(3) / math.gamma(3 - beta) * t ** (2 - beta)
        assert V.caputo_quadrature(lambda s: s * s, beta, t) == pytest.approx(want, rel=1e-9)


def test_caputo_table_spot_check():
    prof = E.Fun("ml", (E.Const(0.5), E.Neg(E.Pow(E.T_VAR, E.Const(0.5)))))
    assert V.caputo_table_check(prof, 0.5) <= 1e-6
    assert V.caputo_table_check(E.parse("2*t^1.5"), 0.7) <= 1e-6


def test_caputo_quadrature_validation():
    with pytest.raises(ValueError):
        V.caputo_quadrature(lambda s: s, 1.0, 1.0)
    with pytest.raises(ValueError):
        V.caputo_quadrature(lambda s: s, 0.5, 0.0)


# ---------------------------------------------------------------- orders


def test_fit_order_examples():
    assert V.fit_order([1e-2, 2.5e-3, 6.25e-4]).global_order == pytest.approx(2.0, abs=1e-12)
    rep = V.fit_order([1e-3, 5e-4, 2.5e-4])
    assert rep.global_order == pytest.approx(1.0, abs=1e-12)
    assert rep.pairwise == pytest.approx((1.0, 1.0), abs=1e-12)


@pytest.mark.parametrize("p", [0.5, 1.0, 1.5, 2.0])
def test_fit_order_recovers_power(p):
    h = np.array([0.1, 0.05, 0.025, 0.0125, 0.00625])
    rep = V.fit_order(3.7 * h**p, h)
    assert abs(rep.global_order - p) <= 1e-10
    assert all(abs(q - p) <= 1e-10 for q in rep.pairwise)


def test_fit_order_irregular_spacing():
    h = np.array([0.3, 0.17, 0.05, 0.011])
    assert V.fit_order(2 * h**1.5, h).global_order == pytest.approx(1.5, abs=1e-10)


@pytest.mark.parametrize("errs", [[1e-2, 1e-3], [1e-2, 0.0, 1e-4], [1e-2, -1e-3, 1e-4], [1, math.nan, 1]])
def test_fit_order_rejects(errs):
    with pytest.raises(ValueError):
        V.fit_order(errs)


def test_fit_order_rejects_bad_spacing():
    with pytest.raises(ValueError):
        V.fit_order([1e-2, 1e-3, 1e-4], h=[0.1, 0.2, 0.05])
    with pytest.raises(ValueError):
        V.fit_order([1e-2, 1e-3, 1e-4], resolutions=[50, 50, 100])


def test_convergence_report_dict():
    d = V.fit_order([4e-2, 1e-2, 2.5e-3], resolutions=(10, 20, 40), errors_l2=[1, 0.5, 0.25]).to_dict()
    assert d["resolutions"] == [10, 20, 40] and d["errors_l2"] == [1, 0.5, 0.25]
