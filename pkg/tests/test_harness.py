import json
import math

import numpy as np
import pytest

from arkimex.harness.config import ConfigError, load_config, parse_config
from arkimex.harness.converge import (fit_order, roundoff_floor, run_convergence,
                                      run_split_floor_study)
from arkimex.harness.energy import energy_matrix, relative_drift, run_energy
from arkimex.harness.problems import build_problem, hv_oscillator
from arkimex.harness.reports import json_payload, read_csv, write_csv, write_report
from arkimex.harness.scan import (BASE_LADDER, STABLE_ACCURATE, UNSTABLE, rescaled_ladder,
                                  scan_max_dt, scan_scaling_sensitivity)
from arkimex.integrator import BlockTridiagonalJacobian, SplitODEProblem, TridiagonalBlock
from arkimex.models import OscillatorEnsemble, SplitOscillator
from arkimex.tableaux import get_method, load_catalog


class InjectedError(SplitODEProblem):
    """q' = 0 with an exact solution offset by err(dt) (set by the test)."""

    dimension = 1
    component_classes = ("u",)
    has_exact = True

    def __init__(self):
        self.offset = 0.0

    def eval_explicit(self, t, q):
        return np.zeros(1)

    def eval_implicit(self, t, q):
        return np.zeros(1)

    def implicit_jacobian(self, t, q):
        return BlockTridiagonalJacobian(
            [TridiagonalBlock(0, np.zeros(0), np.zeros(1), np.zeros(0))], 1)

    def initial_state(self):
        return np.ones(1)

    def exact_solution(self, t):
        return np.array([1.0 + self.offset])


# --- floor and fit -------------------------------------------------------------------

def test_roundoff_floor_examples():
    assert roundoff_floor(768000) == pytest.approx(1.705e-10, rel=1e-3)
    assert roundoff_floor(1) == 2.220446049250313e-16
    assert roundoff_floor(10 ** 6) == pytest.approx(2.220446049250313e-10, rel=1e-15)
    with pytest.raises(ValueError):
        roundoff_floor(0)


def test_fit_order_examples():
    alpha, beta, used = fit_order([(0.1, 1e-2), (0.05, 2.5e-3)], 1e-12)
    assert beta == pytest.approx(2.0, abs=1e-12) and alpha == pytest.approx(1.0)
    assert len(used) == 2
    assert fit_order([(0.1, 1e-2), (0.05, 1e-11)], 1e-10) == (None, None, [])


def test_fit_order_uses_two_smallest_above_floor():
    pts = [(0.4, 0.16), (0.2, 0.04), (0.1, 0.01), (0.05, 1e-14)]
    _, beta, used = fit_order(pts, 1e-12)
    assert sorted(used) == [(0.1, 0.01), (0.2, 0.04)]
    assert beta == pytest.approx(2.0)


def test_fit_order_scale_invariant():
    pts = [(0.1, 3e-3), (0.05, 4.1e-4), (0.025, 5.3e-5)]
    a1, b1, _ = fit_order(pts, 1e-15)
    a2, b2, _ = fit_order([(d, 7.3 * e) for d, e in pts], 1e-15)
    assert abs(b1 - b2) <= 1e-12 and a2 == pytest.approx(7.3 * a1)


def test_fit_order_synthetic_power_law():
    pts = [(d, 3.0 * d ** 2) for d in (0.1, 0.05, 0.025)]
    assert fit_order(pts, 1e-16)[1] == pytest.approx(2.0, abs=1e-6)


# --- convergence runs -----------------------------------------------------------------------

def test_run_convergence_dbm453_order():
    P = 2 * np.pi / 10
    rep = run_convergence(get_method("DBM453"), SplitOscillator(1.0, 10.0),
                          [P * f for f in (0.1, 0.05, 0.025, 0.0125)], 10 * P)
    assert 2.8 <= rep.beta <= 3.2
    assert rep.floor == roundoff_floor(800)


def test_run_convergence_ars222_order():
    P = 2 * np.pi / 10
    rep = run_convergence(get_method("ARS222"), SplitOscillator(1.0, 10.0),
                          [P * f for f in (0.1, 0.05, 0.025, 0.0125)], 10 * P)
    assert 1.85 <= rep.beta <= 2.1


def test_run_convergence_injected_errors():
    prob = InjectedError()
    rep = run_convergence(get_method("ARS232"), prob, [0.1, 0.05], 1.0)
    assert rep.errors == [0.0, 0.0] and not rep.fit_available      # all below floor


def test_run_convergence_preconditions():
    p = SplitOscillator()
    with pytest.raises(ValueError):
        run_convergence(get_method("ARS232"), p, [0.05, 0.1], 1.0)
    with pytest.raises(ValueError):
        run_convergence(get_method("ARS232"), p, [0.3], 1.0)


def test_kgu35_reference_close_to_exact():
    P = 2 * np.pi / 3
    p = SplitOscillator(1.0, 2.0)
    lad = [P / 10, P / 20]
    a = run_convergence(get_method("ARS343"), p, lad, P, reference="exact")
    b = run_convergence(get_method("ARS343"), p, lad, P, reference="kgu35")
    assert np.allclose(a.errors, b.errors, rtol=1e-3)
    assert b.floor == roundoff_floor(b.diagnostics["reference_steps"])


def test_split_floor_nu_zero_matches_k0_bitwise():
    prob = hv_oscillator(nu=0.0)
    lad = [2 * np.pi / n for n in (10, 20, 40)]
    m = get_method("ARS343")
    k0 = run_split_floor_study(m, prob, lad, 2 * np.pi, K=0)
    k3 = run_split_floor_study(m, prob, lad, 2 * np.pi, K=3)
    assert k0.errors == k3.errors


# --- scans ----------------------------------------------------------------------------------

def test_rescaled_ladder_shape():
    lad = rescaled_ladder(3.2)
    assert len(lad) == 16 and lad[-1] == pytest.approx(3.2) and lad[0] == pytest.approx(0.1)
    assert lad == sorted(lad) and BASE_LADDER[0] == 10


@pytest.mark.parametrize("name,y", [("ARS232", 1.73), ("DBM453", 3.87)])
def test_scan_largest_stable_matches_ymax(name, y):
    m = get_method(name)
    lad = list(y * np.arange(0.90, 1.1001, 0.01))
    rep = scan_max_dt(m, OscillatorEnsemble.spanning(1.0, 8), lad, 1000.0)
    assert rep.largest_stable == pytest.approx(y, rel=0.05)


def test_scan_implicit_only_rotation_always_stable():
    prob = SplitOscillator(0.0, 1.0)
    for name in ("ARS232", "DBM453", "ARS343"):
        rep = scan_max_dt(get_method(name), prob, rescaled_ladder(50.0), 200.0)
        assert all(o.outcome != UNSTABLE for o in rep.outcomes)


def test_scan_normalized_metrics():
    m = get_method("DBM453")
    rep = scan_max_dt(m, OscillatorEnsemble.spanning(1.0, 4), [1.0, 2.0], 20.0, accuracy=1.0)
    norm = rep.normalized(rep.largest_stable)
    assert norm["per_implicit_solve"] == pytest.approx(2.0 / 4)
    assert norm["per_explicit_eval"] == pytest.approx(2.0 / 5)
    for meth in load_catalog():
        r = scan_max_dt(meth, SplitOscillator(0.0, 0.0), [0.5], 1.0)
        n = r.normalized(0.5)
        if meth.declared_implicit_solves and meth.declared_explicit_evals >= meth.declared_implicit_solves:
            assert n["per_implicit_solve"] >= n["per_explicit_eval"]
    kgu = scan_max_dt(get_method("KGU35"), SplitOscillator(1.0, 0.0), [0.5], 1.0)
    assert kgu.normalized(0.5)["per_implicit_solve"] is None


def test_scan_requires_ascending_ladder():
    with pytest.raises(ValueError):
        scan_max_dt(get_method("ARS232"), SplitOscillator(), [0.2, 0.1], 1.0)


def test_scan_accuracy_classes():
    rep = scan_max_dt(get_method("ARS232"), SplitOscillator(1.0, 0.0), [0.01, 0.5, 1.0], 10.0,
                      accuracy=1e-3)
    assert [o.outcome for o in rep.outcomes] == [STABLE_ACCURATE, "stable-only", "stable-only"]
    assert rep.largest_accurate == 0.01 and rep.largest_stable == 1.0


def test_scaling_ratio_one_at_base_scale():
    fam = lambda X: OscillatorEnsemble.spanning(1.0, 4).scaled(X)
    rows = scan_scaling_sensitivity(get_method("ARS232"), fam, rescaled_ladder(2.0), 100.0,
                                    scales=(1, 10))
    assert rows[0]["ratio"] == 1.0
    assert 0.9 <= rows[1]["ratio"] <= 1.1


def test_scaling_sub_proportional_when_accuracy_binds():
    # fixed run length: X times more periods, so the accurate step shrinks faster than 1/X
    fam = lambda X: OscillatorEnsemble.spanning(1.0, 2).scaled(X)
    lad = list(np.geomspace(0.01, 1.0, 25))
    rows = scan_scaling_sensitivity(get_method("ARS232"), fam, lad, 20.0, scales=(1, 10),
                                    accuracy=1e-2, scale_time=False)
    assert rows[1]["ratio"] < 0.9


# --- energy ---------------------------------------------------------------------------------

def test_relative_drift_examples():
    assert np.array_equal(relative_drift([0.0, 0.0, 0.0]), np.zeros(3))
    d = relative_drift([2.0, 2.2, 1.8])
    assert d[0] == 0.0 and np.allclose(d, [0.0, 0.1, -0.1])


def test_energy_zero_state():
    prob = hv_oscillator()
    rep = run_energy(get_method("ARS232"), prob, 0.1, 20, K=2, q0=np.zeros(prob.dimension))
    assert np.array_equal(rep.drift, np.zeros(21))


def test_energy_first_entry_exact_zero():
    prob = SplitOscillator(1.0, 2.0)
    rep = run_energy(get_method("ARS343"), prob, 0.1, 10)
    assert rep.drift[0] == 0.0 and len(rep.times) == 11 and not rep.post_step


def test_energy_instability_truncates():
    rep = run_energy(get_method("ARS232"), SplitOscillator(1.0, 0.0), 2.0, 2000)
    assert rep.failure == "unstable" and len(rep.drift) < 2001


def test_energy_matrix_rows():
    rows = energy_matrix([get_method("ARS232")], hv_oscillator(), 2 * np.pi / 20, 2 * np.pi, K=2)
    assert [(r["hyperviscosity"], r["K"]) for r in rows] == [(False, 0), (False, 0),
                                                              (True, 2), (True, 2)]
    assert rows[1]["dt"] == rows[0]["dt"] / 2


# --- config and problems -------------------------------------------------------------------

def test_parse_config_defaults_and_values():
    cfg = parse_config({"methods": ["ARS232"], "problem": {"id": "ensemble", "params": {"K": 4}},
                        "ladder": [0.1, 0.2], "t_final": 10, "K": 0})
    assert cfg.methods == ["ARS232"] and cfg.problem_params == {"K": 4}
    assert cfg.ladder == [0.1, 0.2] and cfg.t_final == 10.0 and cfg.K == 0
    assert parse_config(None).methods == "all"


@pytest.mark.parametrize("bad", [{"nope": 1}, {"ladder": []}, {"ladder": [0.1, -1]},
                                 {"t_final": "x"}, {"reference": "rk4"}, {"K": -1},
                                 {"methods": "ARS232"}, {"problem": 5}, [1, 2]])
def test_parse_config_rejects(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("ladder: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    good = tmp_path / "good.yaml"
    good.write_text("methods: [DBM453]\nt_final: 6.0\nladder: [0.6, 0.3]\n")
    assert load_config(good).ladder == [0.6, 0.3]


def test_build_problem():
    assert isinstance(build_problem("split-oscillator", {"omega_I": 3.0}), SplitOscillator)
    col = build_problem("column", {"M": 8, "modes": {"2": 1.0}})
    assert col.M == 8
    with pytest.raises(ConfigError):
        build_problem("nope")
    with pytest.raises(ConfigError):
        build_problem("ensemble", {"bogus": 1})


def test_hv_oscillator_damping_default():
    p = hv_oscillator(damping=0.5)
    assert p.hyperviscosity.eigenvalue(1) == pytest.approx(0.5)


# --- reports --------------------------------------------------------------------------------

def test_csv_schema_header_and_round_trip(tmp_path):
    rows = [{"method": "ARS232", "dt": 0.1, "hyperviscosity": True, "K": 2, "max_abs_drift": 1e-3,
             "final_drift": -1e-4, "failure": None}]
    path = write_csv(tmp_path / "e.csv", "energy_summary", rows)
    assert path.read_text().splitlines()[0] == "# schema_version: 1"
    back = read_csv(path)
    assert back[0]["hyperviscosity"] == "yes" and float(back[0]["dt"]) == 0.1
    assert back[0]["failure"] == ""


def test_reports_deterministic_except_metadata(tmp_path):
    rows = [{"re": -1.0, "im": 0.5, "which": "explicit"}]
    a = write_report(tmp_path / "a", "r", "boundary", rows, {"x": np.float64(1.5)}, {"s": 1})
    b = write_report(tmp_path / "b", "r", "boundary", rows, {"x": np.float64(1.5)}, {"s": 1})
    assert a[0].read_bytes() == b[0].read_bytes()
    ja, jb = (json.loads(p.read_text()) for p in (a[1], b[1]))
    ja.pop("metadata")
    jb.pop("metadata")
    assert ja == jb == json_payload("boundary", rows, {"x": 1.5})


def test_json_non_finite_values_serialize():
    p = json_payload("converge", [{"error": math.inf}])
    assert p["rows"][0]["error"] == "inf"
