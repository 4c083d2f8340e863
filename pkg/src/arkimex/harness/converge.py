"""Convergence studies: error ladders, round-off floor and order fit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..integrator import NewtonConfig, integrate
from ..tableaux import ARKMethod, get_method

MACHINE_EPS = 2.220446049250313e-16
EPS_DIV = 1e-30


@dataclass
class ConvergenceReport:
    method: str
    problem: str
    dts: list[float]
    errors: list[float]
    floor: float
    alpha: float | None
    beta: float | None
    fit_points: list[tuple[float, float]]
    reference: str = "exact"
    failures: list[str | None] = field(default_factory=list)
    beta_large: float | None = None          # fit through the two largest steps
    diagnostics: dict = field(default_factory=dict)

    @property
    def fit_available(self) -> bool:
        return self.beta is not None


def roundoff_floor(n_reference_steps: int) -> float:
    if n_reference_steps < 1:
        raise ValueError("n_reference_steps must be >= 1")
    return MACHINE_EPS * n_reference_steps


def max_relative_error(q, ref) -> float:
    q, ref = np.asarray(q), np.asarray(ref)
    return float(np.max(np.abs(q - ref) / (np.abs(ref) + EPS_DIV)))


def fit_order(points, floor: float):
    """Fit alpha * dt^beta through the two smallest errors strictly above ``floor``.

    Returns (alpha, beta, used_points), or (None, None, []) when fewer than
    two points qualify.
    """
    ok = [(dt, e) for dt, e in points if math.isfinite(e) and e > floor]
    if len(ok) < 2:
        return None, None, []
    (d1, e1), (d2, e2) = sorted(ok, key=lambda p: p[1])[:2]
    if d1 == d2:
        return None, None, []
    beta = math.log(e1 / e2) / math.log(d1 / d2)
    alpha = e1 / d1 ** beta
    return alpha, beta, [(d1, e1), (d2, e2)]


def steps_for(t_final: float, dt: float) -> int:
    n = round(t_final / dt)
    if n < 1 or abs(n * dt - t_final) > 1e-9 * max(abs(t_final), 1.0):
        raise ValueError(f"t_final = {t_final!r} is not an integer multiple of dt = {dt!r}")
    return n


def run_convergence(method: ARKMethod, problem, ladder, t_final: float, reference="exact",
                    post_step=None, config: NewtonConfig | None = None,
                    reference_dt: float | None = None,
                    exact_kwargs: dict | None = None) -> ConvergenceReport:
    """Errors at t_final for each dt in ``ladder`` (sorted descending).

    ``reference`` is "exact" (the problem's exact solution) or "kgu35", a
    fine-step run of the explicit KGU35 method with step ``reference_dt``
    (default: smallest ladder step / 16). The floor is machine epsilon times
    the step count of the reference run, or of the finest ladder run when the
    reference is exact.
    """
    ladder = [float(d) for d in ladder]
    if any(a <= b for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be sorted in descending order")
    steps = [steps_for(t_final, dt) for dt in ladder]
    q0 = problem.initial_state()
    if reference == "exact":
        ref = problem.exact_solution(t_final, **(exact_kwargs or {}))
        n_ref = max(steps)
    elif reference == "kgu35":
        rdt = reference_dt or ladder[-1] / 16
        n_ref = steps_for(t_final, rdt)
        tr = integrate(get_method("KGU35"), problem, 0.0, q0, rdt, n_ref, post_step=post_step)
        if not tr.ok:
            raise RuntimeError(f"reference run failed: {tr.failure.message}")
        ref = tr.q
    else:
        raise ValueError(f"unknown reference {reference!r}")
    floor = roundoff_floor(n_ref)
    errors, failures, iters = [], [], []
    for dt, n in zip(ladder, steps):
        tr = integrate(method, problem, 0.0, q0, dt, n, post_step=post_step, config=config)
        if tr.ok:
            errors.append(max_relative_error(tr.q, ref))
            failures.append(None)
        else:
            errors.append(math.inf)
            failures.append(tr.failure.kind)
        iters.append(int(tr.newton_iterations.max()) if tr.newton_iterations.size else 0)
    alpha, beta, used = fit_order(list(zip(ladder, errors)), floor)
    big = [(d, e) for d, e in zip(ladder, errors) if math.isfinite(e) and e > floor][:2]
    beta_large = (math.log(big[0][1] / big[1][1]) / math.log(big[0][0] / big[1][0])
                  if len(big) == 2 else None)
    return ConvergenceReport(method.name, type(problem).__name__, ladder, errors, floor, alpha,
                             beta, used, reference, failures, beta_large,
                             {"max_newton_iterations": iters, "reference_steps": n_ref})


def run_split_floor_study(method: ARKMethod, problem, ladder, t_final: float, K: int = 1,
                          config: NewtonConfig | None = None) -> ConvergenceReport:
    """Convergence with the hyperviscosity post-step applied K times per step.

    ``problem`` is an ``OscillatorEnsemble`` with a field and nu > 0. With
    K >= 1 the reference is the exact flow including the continuous
    hyperviscous decay, so the first-order splitting error shows at small dt.
    With K = 0 the post-step is off and the reference is the undamped flow.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    damped = K >= 1 and problem.hyperviscosity.nu > 0
    post = problem.post_step(K) if K >= 1 else None
    rep = run_convergence(method, problem, ladder, t_final, reference="exact", post_step=post,
                          config=config, exact_kwargs={"dissipation": damped})
    rep.diagnostics["K"] = K
    return rep
