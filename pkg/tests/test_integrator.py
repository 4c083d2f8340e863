import math

import numpy as np
import pytest

from arkimex.integrator import (BlockTridiagonalJacobian, NewtonConfig, NewtonConvergenceError,
                                PostStep, SplitODEProblem, TridiagonalBlock,
                                apply_split_poststep, integrate, newton_solve_stage, step,
                                wrms_norm)
from arkimex.models import HyperviscosityOperator, SplitOscillator, oscillator_exact
from arkimex.tableaux import get_method, load_catalog
from arkimex.tridiag import SingularMatrixError, TridiagonalSystem, tridiag_factor_solve

# methods whose last explicit stage feeds nothing: one fewer f^E than declared
UNUSED_LAST_EXPLICIT_STAGE = {"ARS222", "GSA222"}


class LinearSplit(SplitODEProblem):
    """q' = E q + I q with I tridiagonal; ``classes`` picks WRMS weights."""

    def __init__(self, E, sub, diag, sup, q0):
        self.E = np.asarray(E, dtype=float)
        self.block = TridiagonalBlock(0, np.asarray(sub, float), np.asarray(diag, float),
                                      np.asarray(sup, float))
        self.I = TridiagonalSystem(sub, diag, sup).dense()
        self.dimension = len(q0)
        self.component_classes = ("u",) * self.dimension
        self.q0 = np.asarray(q0, dtype=float)

    def eval_explicit(self, t, q):
        return self.E @ q

    def eval_implicit(self, t, q):
        return self.I @ q

    def implicit_jacobian(self, t, q):
        return BlockTridiagonalJacobian([self.block], self.dimension)

    def initial_state(self):
        return self.q0.copy()


class Cubic(SplitODEProblem):
    """Scalar q' = -q^3 (implicit), for nonlinear Newton checks."""

    dimension = 1
    component_classes = ("u",)

    def eval_explicit(self, t, q):
        return np.zeros(1)

    def eval_implicit(self, t, q):
        return -q ** 3

    def implicit_jacobian(self, t, q):
        return BlockTridiagonalJacobian(
            [TridiagonalBlock(0, np.zeros(0), -3 * q ** 2, np.zeros(0))], 1)


def zero_implicit(n, rng):
    E = rng.standard_normal((n, n))
    return LinearSplit(E, np.zeros(n - 1), np.zeros(n), np.zeros(n - 1), rng.standard_normal(n))


def explicit_rk_step(tab, f, q, dt):
    k = []
    for i in range(tab.stages):
        z = q + dt * sum((tab.A[i, j] * k[j] for j in range(i)), np.zeros_like(q))
        k.append(f(z))
    return q + dt * sum(tab.b[j] * k[j] for j in range(tab.stages))


# --- wrms norm ----------------------------------------------------------------------

def test_wrms_norm_examples():
    w = np.array([0.5, 2.0])
    assert wrms_norm(np.zeros(2), w) == 0.0
    assert wrms_norm(w, w) == pytest.approx(1.0, abs=1e-15)
    assert wrms_norm(np.array([1.0, 0.0]), w) == pytest.approx(math.sqrt(2.0), abs=1e-15)


def test_wrms_norm_rejects_zero_weight():
    with pytest.raises(ValueError):
        wrms_norm(np.ones(2), np.array([1.0, 0.0]))


def test_weights_structure():
    p = SplitOscillator()
    cfg = NewtonConfig()
    w = p.wrms_weights(np.array([2.0, -1.0]), cfg)
    assert np.allclose(w, 1e-6 * np.array([2.0, 1.0]) + 1e-6 * cfg.class_weights["u"])


def test_newton_config_invariants():
    with pytest.raises(ValueError):
        NewtonConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        NewtonConfig(rate_floor_factor=1.0)
    c = NewtonConfig()
    assert (c.epsilon, c.max_iterations, c.rate_floor_factor, c.epsilon_r) == (0.1, 10, 0.3, 1e-6)


# --- tridiagonal solve through the public helper ----------------------------------------

def test_tridiag_factor_solve_examples():
    eye = TridiagonalSystem(np.zeros(2), np.ones(3), np.zeros(2))
    assert np.array_equal(tridiag_factor_solve(eye, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])
    lap = TridiagonalSystem([-1.0, -1.0], [2.0, 2.0, 2.0], [-1.0, -1.0])
    assert np.allclose(tridiag_factor_solve(lap, [1.0, 0.0, 1.0]), [1.0, 1.0, 1.0], atol=1e-15)
    rng = np.random.default_rng(0)
    n = 50
    sysm = TridiagonalSystem(rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n) + 3.0,
                             rng.uniform(-1, 1, n - 1))
    rhs = rng.standard_normal(n)
    x = tridiag_factor_solve(sysm, rhs)
    assert np.linalg.norm(sysm.dense() @ x - rhs) <= 1e-12 * np.linalg.norm(rhs)


# --- Jacobian containers ------------------------------------------------------------------

def test_block_jacobian_partition_checked():
    blk = TridiagonalBlock(0, np.zeros(1), np.zeros(2), np.zeros(1))
    with pytest.raises(ValueError):
        BlockTridiagonalJacobian([blk], 3)
    with pytest.raises(ValueError):
        BlockTridiagonalJacobian([TridiagonalBlock(1, np.zeros(0), np.zeros(1), np.zeros(0))], 1)


def test_block_jacobian_solve_matches_dense():
    rng = np.random.default_rng(1)
    blocks, start = [], 0
    for n in (2, 3, 1, 4):
        blocks.append(TridiagonalBlock(start, rng.standard_normal(n - 1), rng.standard_normal(n),
                                       rng.standard_normal(n - 1)))
        start += n
    J = BlockTridiagonalJacobian(blocks, start)
    h = 0.3
    rhs = rng.standard_normal(start)
    x = J.solve(h, rhs)
    assert np.allclose((np.eye(start) - h * J.dense()) @ x, rhs, atol=1e-12)
    v = rng.standard_normal(start)
    assert np.allclose(J.matvec(v), J.dense() @ v, atol=1e-14)


def test_block_jacobian_singular_names_block():
    blocks = [TridiagonalBlock(0, np.zeros(1), np.zeros(2), np.zeros(1)),
              TridiagonalBlock(2, np.zeros(1), np.array([0.0, 1.0]), np.zeros(1))]
    J = BlockTridiagonalJacobian(blocks, 4)
    with pytest.raises(SingularMatrixError) as err:
        J.solve(1.0, np.ones(4))    # I - J has a zero at global row 3, block 1 row 1
    assert (err.value.block, err.value.index) == (1, 1)


# --- Newton ---------------------------------------------------------------------------------

def test_newton_linear_second_increment_negligible():
    p = SplitOscillator(0.0, 10.0)
    q = p.initial_state()
    w = p.wrms_weights(q)
    res = newton_solve_stage(p, 1, 0.5, 0.1, 0.0, q, q, w, NewtonConfig())
    assert res.iterations <= 2
    if len(res.deltas) == 2:
        assert res.deltas[1] <= 1e-12 * res.deltas[0]
    # the converged stage solves z = known + h f(z)
    z = res.z
    assert np.allclose(z, q + 0.05 * p.eval_implicit(0.0, z), atol=1e-14)


@pytest.mark.parametrize("eps", [0.1, 1e-2, 1e-4])
def test_newton_affine_at_most_two_iterations(eps):
    p = SplitOscillator(0.0, 50.0)
    q = p.initial_state()
    res = newton_solve_stage(p, 1, 1.0, 1.0, 0.0, q, q, p.wrms_weights(q),
                             NewtonConfig(epsilon=eps))
    assert res.iterations <= 2


def test_newton_zero_implicit_part_one_iteration():
    p = SplitOscillator(1.0, 0.0)
    q = p.initial_state()
    known = q + 0.01
    res = newton_solve_stage(p, 1, 0.5, 0.1, 0.0, known, q, p.wrms_weights(q), NewtonConfig())
    assert np.array_equal(res.z, known)
    z2 = newton_solve_stage(p, 1, 0.5, 0.1, 0.0, known, known, p.wrms_weights(q), NewtonConfig())
    assert z2.iterations == 1 and z2.deltas == [0.0]


def test_newton_nonlinear_converges_and_caps():
    p = Cubic()
    q = np.array([1.0])
    res = newton_solve_stage(p, 1, 1.0, 0.5, 0.0, q, q, p.wrms_weights(q), NewtonConfig())
    z = res.z[0]
    assert abs(z - (1.0 - 0.5 * z ** 3)) < 1e-6
    assert res.iterations >= 3
    with pytest.raises(NewtonConvergenceError) as err:
        newton_solve_stage(p, 2, 1.0, 0.5, 0.0, q, q, p.wrms_weights(q),
                           NewtonConfig(max_iterations=1, epsilon=1e-3))
    assert err.value.stage == 2 and err.value.iterations == 1


def test_newton_requires_positive_diagonal():
    p = SplitOscillator()
    q = p.initial_state()
    with pytest.raises(ValueError):
        newton_solve_stage(p, 0, 0.0, 0.1, 0.0, q, q, p.wrms_weights(q), NewtonConfig())


# --- step ---------------------------------------------------------------------------------

@pytest.mark.parametrize("m", load_catalog(), ids=lambda m: m.name)
def test_step_on_zero_rhs_is_identity(m):
    p = SplitOscillator(0.0, 0.0)
    q = p.initial_state()
    q1, _ = step(m, p, 0.0, q, 0.1)
    assert np.array_equal(q1, q)


@pytest.mark.parametrize("m", load_catalog(), ids=lambda m: m.name)
def test_step_with_zero_implicit_part_is_explicit_rk(m):
    rng = np.random.default_rng(2)
    p = zero_implicit(4, rng)
    q = p.initial_state()
    q1, _ = step(m, p, 0.0, q, 0.05)
    ref = explicit_rk_step(m.explicit, lambda z: p.E @ z, q, 0.05)
    assert np.max(np.abs(q1 - ref)) <= 1e-14 * np.max(np.abs(ref))


@pytest.mark.parametrize("m", load_catalog(), ids=lambda m: m.name)
def test_stage_count_accounting(m):
    p = SplitOscillator(1.0, 10.0)
    _, d = step(m, p, 0.0, p.initial_state(), 0.01)
    assert d.newton_solves == m.declared_implicit_solves
    expected = m.declared_explicit_evals
    if m.name in UNUSED_LAST_EXPLICIT_STAGE:
        assert not np.any(m.explicit.A[:, -1]) and m.explicit.b[-1] == 0.0
        expected -= 1
    assert d.explicit_evals == expected


def test_kgu35_no_newton_five_evals():
    m = get_method("KGU35")
    p = SplitOscillator(1.0, 10.0)
    _, d = step(m, p, 0.0, p.initial_state(), 0.01)
    assert d.newton_solves == 0 and d.explicit_evals == 5
    assert d.newton_iterations == [0] * 5


def test_step_does_not_modify_input():
    p = SplitOscillator()
    q = p.initial_state()
    keep = q.copy()
    step(get_method("DBM453"), p, 0.0, q, 0.1)
    assert np.array_equal(q, keep)


def test_step_rejects_nonpositive_dt():
    p = SplitOscillator()
    with pytest.raises(ValueError):
        step(get_method("ARS232"), p, 0.0, p.initial_state(), 0.0)


def test_dbm453_local_error_order_four():
    m = get_method("DBM453")
    p = SplitOscillator(1.0, 10.0)
    q0 = p.initial_state()
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        q1, _ = step(m, p, 0.0, q0, dt)
        errs.append(np.linalg.norm(q1 - oscillator_exact(1.0, 10.0, q0, dt)))
    rates = [math.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert all(3.7 <= r <= 4.3 for r in rates)
    assert errs[0] <= 10.0 * 1e-2 ** 4 * 11 ** 4


def test_stage_times_use_own_abscissae():
    # SSP2232 has c_E != c_I; a time-dependent split pins which c each part sees
    class TimeSplit(SplitODEProblem):
        dimension = 2
        component_classes = ("u", "u")

        def eval_explicit(self, t, q):
            return np.array([t, 0.0])

        def eval_implicit(self, t, q):
            return np.array([0.0, t])

        def implicit_jacobian(self, t, q):
            return BlockTridiagonalJacobian(
                [TridiagonalBlock(0, np.zeros(1), np.zeros(2), np.zeros(1))], 2)

    m = get_method("SSP2232")
    assert not np.array_equal(m.explicit.c, m.implicit.c)
    dt, t0 = 0.1, 1.0
    q1, _ = step(m, TimeSplit(), t0, np.zeros(2), dt)
    assert q1[0] == pytest.approx(dt * sum(m.explicit.b * (t0 + m.explicit.c * dt)), abs=1e-15)
    assert q1[1] == pytest.approx(dt * sum(m.implicit.b * (t0 + m.implicit.c * dt)), abs=1e-15)


@pytest.mark.parametrize("m", [m for m in load_catalog() if m.expected and m.expected["shared_b"]],
                         ids=lambda m: m.name)
def test_shared_b_conserves_linear_invariant(m):
    # sum(q) is conserved by f^E + f^I but by neither part alone
    rng = np.random.default_rng(5)
    n = 6
    sub, diag, sup = rng.standard_normal(n - 1), -np.abs(rng.standard_normal(n)) - 1, \
        rng.standard_normal(n - 1)
    I = TridiagonalSystem(sub, diag, sup).dense()
    W = rng.standard_normal((n, n))
    W -= W.mean(axis=0)
    p = LinearSplit(W - I, sub, diag, sup, rng.standard_normal(n))
    assert abs(np.sum(p.eval_implicit(0.0, p.q0))) > 1e-3
    q = p.initial_state()
    for _ in range(5):
        q1, _ = step(m, p, 0.0, q, 0.05)
        assert abs(q1.sum() - q.sum()) <= 1e-12 * np.abs(q).sum()
        q = q1


# --- post-step ----------------------------------------------------------------------------

def test_poststep_k0_and_nu0_leave_state():
    op = HyperviscosityOperator(8, 1 / 8, 1e-3)
    u = np.random.default_rng(0).standard_normal(8)
    assert apply_split_poststep(u, op, 0.1, 0) is u
    zero = HyperviscosityOperator(8, 1 / 8, 0.0)
    assert np.array_equal(apply_split_poststep(u, zero, 0.1, 3), u)
    with pytest.raises(ValueError):
        apply_split_poststep(u, op, 0.1, -1)


def test_poststep_fourier_mode_decay():
    n, nu, dt, K, k = 16, 2e-5, 0.3, 3, 2
    op = HyperviscosityOperator(n, 1 / n, nu)
    x = np.arange(n) / n
    u = np.cos(2 * np.pi * k * x)
    out = apply_split_poststep(u, op, dt, K)
    lam = op.eigenvalue(np.array([k]))[0]
    assert np.allclose(out, (1 - dt / K * lam) ** K * u, atol=1e-14)


def test_poststep_touches_only_indices():
    op = HyperviscosityOperator(4, 0.25, 1e-2)
    q = np.arange(6, dtype=float)
    out = PostStep(op, 2, slice(2, 6))(q, 0.1)
    assert np.array_equal(out[:2], q[:2])


# --- integrate -------------------------------------------------------------------------------

def test_integrate_requires_steps():
    p = SplitOscillator()
    with pytest.raises(ValueError):
        integrate(get_method("ARS232"), p, 0.0, p.initial_state(), 0.1, 0)


def test_integrate_flags_instability_beyond_ymax():
    m = get_method("ARS232")
    p = SplitOscillator(1.0, 0.0)
    tr = integrate(m, p, 0.0, p.initial_state(), 2.0, 2000)
    assert not tr.ok and tr.failure.kind == "unstable"
    assert tr.steps_completed < 2000
    assert tr.failure.time == pytest.approx(2.0 * tr.steps_completed)
    ok = integrate(m, p, 0.0, p.initial_state(), 1.7, 2000)
    assert ok.ok


def test_integrate_records_newton_failure():
    p = Cubic()
    tr = integrate(get_method("ARS232"), p, 0.0, np.array([1.0]), 0.5, 5,
                   config=NewtonConfig(max_iterations=1, epsilon=1e-3))
    assert tr.failure.kind == "newton" and tr.steps_completed == 0


def test_integrate_observers_and_counts():
    m = get_method("ARS343")
    p = SplitOscillator()
    tr = integrate(m, p, 0.0, p.initial_state(), 0.01, 10, observe_every=5,
                   observers={"E": lambda t, q: p.energy(q)})
    assert [t for t, _ in tr.observations["E"]] == pytest.approx([0.0, 0.05, 0.1])
    assert tr.newton_solves == 30 and tr.explicit_evals == 40
    assert tr.newton_iterations.shape == (10, 4)


def test_integrate_post_step_applied():
    calls = []

    def hook(q, dt):
        calls.append(dt)
        return q

    p = SplitOscillator()
    integrate(get_method("ARS232"), p, 0.0, p.initial_state(), 0.1, 3, post_step=hook)
    assert calls == [0.1] * 3


@pytest.mark.parametrize("name,p", [("ARS232", 2), ("ARS343", 3), ("DBM453", 3)])
def test_energy_drift_shrinks_at_method_order(name, p):
    m = get_method(name)
    prob = SplitOscillator(1.0, 2.0)
    drift = []
    for dt in (0.1, 0.05):
        n = int(round(2 * np.pi / dt))
        tr = integrate(m, prob, 0.0, prob.initial_state(), dt, n,
                       observers={"E": lambda t, q: prob.energy(q)})
        E = np.array([e for _, e in tr.observations["E"]])
        drift.append(np.max(np.abs(E - E[0]) / E[0]))
    assert drift[0] / drift[1] >= 2 ** (p - 0.3)
