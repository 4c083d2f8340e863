"""Largest-stable-step scans over a ladder of step sizes."""
from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

from ..integrator import NewtonConfig, integrate
from ..tableaux import ARKMethod
from .converge import max_relative_error

STABLE_ACCURATE = "stable+accurate"
STABLE_ONLY = "stable-only"
UNSTABLE = "unstable"

# step ladder of the reference study (seconds); rescale with ``rescaled_ladder``
BASE_LADDER = (10, 20, 50, 100, 120, 135, 150, 160, 180, 192, 200, 216, 240, 270, 300, 320)


def rescaled_ladder(top: float, base=BASE_LADDER) -> list[float]:
    """The base ladder scaled so that its largest entry equals ``top``."""
    return [top * v / base[-1] for v in base]


@dataclass
class ScanOutcome:
    dt: float
    outcome: str
    steps: int
    error: float | None
    failure: str | None


@dataclass
class ScanReport:
    method: str
    problem: str
    t_final: float
    accuracy: float | None
    outcomes: list[ScanOutcome]
    implicit_solves: int
    explicit_evals: int
    scaling: list[dict] = field(default_factory=list)

    def largest(self, *classes: str) -> float | None:
        ok = [o.dt for o in self.outcomes if o.outcome in classes]
        return max(ok) if ok else None

    @property
    def largest_stable(self) -> float | None:
        return self.largest(STABLE_ACCURATE, STABLE_ONLY)

    @property
    def largest_accurate(self) -> float | None:
        return self.largest(STABLE_ACCURATE)

    def normalized(self, dt: float | None) -> dict:
        """dt / f^I and dt / f^E (None where undefined)."""
        if dt is None:
            return {"per_implicit_solve": None, "per_explicit_eval": None}
        return {"per_implicit_solve": dt / self.implicit_solves if self.implicit_solves else None,
                "per_explicit_eval": dt / self.explicit_evals if self.explicit_evals else None}


def scan_max_dt(method: ARKMethod, problem, ladder, t_final: float,
                accuracy: float | None = None, config: NewtonConfig | None = None,
                post_step=None) -> ScanReport:
    """Integrate to t_final (ceil(t_final/dt) steps) for every dt in ``ladder``."""
    ladder = [float(d) for d in ladder]
    if any(a >= b for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be sorted in ascending order")
    q0 = problem.initial_state()
    outcomes = []
    for dt in ladder:
        n = max(1, math.ceil(t_final / dt - 1e-9))
        tr = integrate(method, problem, 0.0, q0, dt, n, post_step=post_step, config=config)
        if not tr.ok:
            outcomes.append(ScanOutcome(dt, UNSTABLE, tr.steps_completed, None, tr.failure.kind))
            continue
        err = max_relative_error(tr.q, problem.exact_solution(tr.t)) if problem.has_exact else None
        accurate = accuracy is None or (err is not None and err <= accuracy)
        outcomes.append(ScanOutcome(dt, STABLE_ACCURATE if accurate else STABLE_ONLY, n, err, None))
    return ScanReport(method.name, type(problem).__name__, t_final, accuracy, outcomes,
                      method.declared_implicit_solves, method.declared_explicit_evals)


def scan_scaling_sensitivity(method: ARKMethod, family: Callable[[float], object], ladder,
                             t_final: float, scales=(1, 10, 100), accuracy: float | None = None,
                             scale_time: bool = True, config: NewtonConfig | None = None):
    """Rows (X, dt_max(X), dt_max(X) * X / dt_max(1)) for a problem family.

    ``family(X)`` returns the problem with explicit frequencies multiplied by
    X. The ladder (and, with ``scale_time``, the run length) is divided by X,
    so a method limited only by explicit stability gives a ratio of 1.
    """
    rows, base = [], None
    for X in scales:
        problem = family(X)
        rep = scan_max_dt(method, problem, [d / X for d in ladder],
                          t_final / X if scale_time else t_final, accuracy, config)
        dt_max = rep.largest_accurate if accuracy is not None else rep.largest_stable
        if X == scales[0]:
            base = dt_max
        ratio = (dt_max * X / (base * scales[0]) if dt_max is not None and base else None)
        rows.append({"scale": X, "dt_max": dt_max, "ratio": ratio})
    return rows
