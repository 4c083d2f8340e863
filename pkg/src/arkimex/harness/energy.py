"""Relative energy drift [E(t) - E(0)] / E(0) along a run."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..integrator import NewtonConfig, integrate
from ..tableaux import ARKMethod


@dataclass
class EnergyReport:
    method: str
    problem: str
    dt: float
    times: np.ndarray
    drift: np.ndarray                 # first entry is exactly 0
    post_step: bool
    K: int
    failure: str | None = None

    @property
    def max_abs_drift(self) -> float:
        return float(np.max(np.abs(self.drift))) if self.drift.size else 0.0

    @property
    def final_drift(self) -> float:
        return float(self.drift[-1])


def relative_drift(energies) -> np.ndarray:
    """(E - E[0]) / E[0]; all zeros when E[0] == 0."""
    E = np.asarray(energies, dtype=float)
    if E[0] == 0.0:
        return np.zeros_like(E)
    out = (E - E[0]) / E[0]
    out[0] = 0.0
    return out


def run_energy(method: ARKMethod, problem, dt: float, n_steps: int, K: int = 0,
               q0=None, config: NewtonConfig | None = None) -> EnergyReport:
    """Sample the relative energy drift after every step.

    K >= 1 applies the problem's hyperviscosity post-step with K substeps.
    An unstable run truncates the series at the failure.
    """
    post = problem.post_step(K) if K >= 1 else None
    q0 = problem.initial_state() if q0 is None else np.asarray(q0, dtype=float)
    tr = integrate(method, problem, 0.0, q0, dt, n_steps, post_step=post, config=config,
                   observers={"energy": lambda t, q: problem.energy(q)})
    obs = tr.observations["energy"]
    times = np.array([t for t, _ in obs])
    drift = relative_drift([e for _, e in obs])
    return EnergyReport(method.name, type(problem).__name__, dt, times, drift, post is not None,
                        K, tr.failure.kind if tr.failure else None)


def energy_matrix(methods, problem, dt: float, t_final: float, K: int = 1,
                  config: NewtonConfig | None = None) -> list[dict]:
    """Drift for every method at dt and dt/2, with the post-step off and on.

    Rows hold method, dt, hyperviscosity flag, maximum |drift| and final drift.
    """
    rows = []
    for method in methods:
        for hv in (False, True):
            for h in (dt, dt / 2):
                n = int(round(t_final / h))
                rep = run_energy(method, problem, h, n, K=K if hv else 0, config=config)
                rows.append({"method": method.name, "dt": h, "hyperviscosity": hv,
                             "K": rep.K, "max_abs_drift": rep.max_abs_drift,
                             "final_drift": rep.final_drift, "failure": rep.failure})
    return rows
