import numpy as np
import pytest

from arkimex.analysis import (algebraic_orders, certify, check_a_stability,
                              check_algebraic_stability, check_l_stability,
                              check_order_conditions, compare_with_expected,
                              dirk_stability_function, empirical_order, max_imag_stable_step,
                              rational_boundary, stability_at_infinity, stability_boundary,
                              stage_order)
from arkimex.tableaux import ButcherTableau, get_method, load_catalog, make_method

FE = ButcherTableau(np.array([[0.0]]), np.array([1.0]), np.array([0.0]))
BE = ButcherTableau(np.array([[1.0]]), np.array([1.0]), np.array([1.0]))
MID = ButcherTableau(np.array([[0.5]]), np.array([1.0]), np.array([0.5]))


def fe_pair():
    return make_method("FE", [[0.0]], [1.0], [[0.0]], [1.0], order=1)


# --- order conditions ----------------------------------------------------------------

def test_order_conditions_examples():
    assert check_order_conditions(get_method("DBM453"), 3).passed
    assert check_order_conditions(get_method("DBM453"), 3).max_residual <= 1e-12
    assert not check_order_conditions(get_method("ARS232"), 3).passed
    assert check_order_conditions(get_method("ARS232"), 2).passed
    assert check_order_conditions(fe_pair(), 1).passed


def test_order_target_bounds():
    with pytest.raises(ValueError):
        check_order_conditions(get_method("ARS232"), 4)


@pytest.mark.parametrize("m", load_catalog(), ids=lambda m: m.name)
def test_declared_order_conditions_hold(m):
    target = min(m.declared_order, 3)
    assert check_order_conditions(m, target).passed


def test_empirical_order_examples():
    assert 3.7 <= empirical_order(get_method("ARK436")) <= 4.3
    from arkimex.models import SplitOscillator
    P = 2 * np.pi / 11
    beta = empirical_order(get_method("ARK548"), SplitOscillator(1.0, 10.0),
                           [P / 10, P / 20, P / 40], 2 * P)
    assert 4.4 <= beta <= 5.2


# --- stability functions ---------------------------------------------------------------

def test_dirk_stability_examples():
    for tab in (BE, MID, get_method("DBM453").implicit):
        assert dirk_stability_function(tab, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert dirk_stability_function(BE, -1.0) == pytest.approx(0.5, abs=1e-15)
    ars = get_method("ARS232").implicit
    vals = [abs(dirk_stability_function(ars, -x)) for x in (1e2, 1e4, 1e6)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-5


def test_a_stability_examples():
    assert check_a_stability(get_method("ARS232").implicit)
    assert not check_a_stability(FE)
    assert check_a_stability(BE) and check_a_stability(MID)


def test_l_stability_examples():
    assert check_l_stability(get_method("DBM453").implicit)
    assert not check_l_stability(get_method("ARS233").implicit)
    assert not check_l_stability(MID)
    assert stability_at_infinity(MID) == pytest.approx(1.0, abs=1e-15)
    assert check_l_stability(BE)


def test_algebraic_stability_examples():
    assert check_algebraic_stability(get_method("ARS233").implicit)
    assert not check_algebraic_stability(get_method("ARS232").implicit)
    assert check_algebraic_stability(MID)


def test_max_imag_step_examples():
    assert max_imag_stable_step(get_method("ARS222").explicit) < 0.01
    assert max_imag_stable_step(get_method("DBM453").explicit) == pytest.approx(3.87, abs=0.05)
    assert max_imag_stable_step(FE) == 0.0
    assert max_imag_stable_step(get_method("ARS232").explicit) == pytest.approx(np.sqrt(3), abs=1e-6)


def test_stage_order_examples():
    assert stage_order(get_method("ARK324").implicit) == 2
    assert stage_order(get_method("DBM453").explicit) == 1
    assert stage_order(BE) == 1


# --- certification ------------------------------------------------------------------------

def test_certify_ars343():
    r = certify(get_method("ARS343"))
    assert (r.order_explicit, r.order_implicit, r.order_coupled) == (3, 3, 3)
    assert r.a_stable and r.l_stable and r.stiffly_accurate_dirk
    assert not r.stiffly_accurate_erk
    assert r.shared_b and r.shared_c
    assert r.max_imag_step == pytest.approx(2.83, abs=0.05)


def test_certify_ark548_empirical():
    r = certify(get_method("ARK548"))
    assert r.order_source == "empirical"
    assert (r.order_explicit, r.order_implicit, r.order_coupled) == (5, 5, 5)
    assert r.max_imag_step == pytest.approx(0.02, abs=0.05)


def test_certify_fe_pair():
    r = certify(fe_pair())
    assert (r.order_explicit, r.order_implicit, r.order_coupled) == (1, 1, 1)
    assert r.max_imag_step == 0.0


def test_algebraic_orders_cap_at_three():
    assert algebraic_orders(get_method("ARK436")) == (3, 3, 3)


def test_compare_reports_mismatch():
    m = get_method("ARS343")
    r = certify(m, empirical=False)
    exp = dict(m.expected)
    assert compare_with_expected(r, exp)[0] == []
    exp["max_imag_step"] = 2.0
    mism, _ = compare_with_expected(r, exp)
    assert [x.field for x in mism] == ["max_imag_step"]


def test_b_verdict_indeterminate_when_reference_says_yes():
    m = get_method("ARS232")
    r = certify(m, empirical=False)
    exp = dict(m.expected, b_stable=True)
    mism, verdict = compare_with_expected(r, exp)
    assert verdict == "indeterminate" and mism == []


# --- stability boundary ------------------------------------------------------------------

def test_boundary_explicit_euler_circle():
    b = stability_boundary(fe_pair(), resolution=360)
    assert np.max(np.abs(np.abs(b.points + 1.0) - 1.0)) < 1e-6
    assert b.failures == []


@pytest.mark.parametrize("name,y,tol", [("ARS232", 1.73, 0.01), ("DBM453", 3.87, 0.05)])
def test_boundary_imaginary_crossings(name, y, tol):
    b = stability_boundary(get_method(name), resolution=1440)
    assert np.any(np.abs(b.imaginary_axis_crossings() - y) <= tol)


def test_boundary_resolution_checked():
    with pytest.raises(ValueError):
        stability_boundary(get_method("ARS232"), resolution=0)


def test_rational_boundary_on_unit_modulus():
    from arkimex.analysis import stability_values
    tab = get_method("ARS232").implicit
    z = rational_boundary(tab, resolution=180)
    assert np.max(np.abs(np.abs(stability_values(tab, z)) - 1.0)) < 1e-9
