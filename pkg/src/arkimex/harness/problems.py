"""Problem registry: config ids to model instances."""
from __future__ import annotations

import numpy as np

from ..models import AcousticColumn, HyperviscosityOperator, OscillatorEnsemble, SplitOscillator
from .config import ConfigError


def hv_oscillator(omega_E: float = 1.0, omega_I: float = 2.0, field_points: int = 8,
                  advection: float = 0.5, nu: float | None = None,
                  damping: float = 0.5) -> OscillatorEnsemble:
    """One split oscillator plus a periodic advected field with hyperviscosity.

    ``nu`` defaults to the value giving the first field mode the decay rate
    ``damping`` (nu * lambda_1^2 = damping).
    """
    if nu is None:
        unit = HyperviscosityOperator(field_points, 1.0 / field_points, 1.0)
        nu = damping / float(unit.eigenvalue(np.array([1]))[0])
    return OscillatorEnsemble([omega_E], [omega_I], field_points=field_points,
                              advection=advection, nu=nu)


def ensemble(omega_max: float = 1.0, K: int = 8, omega_implicit: float = 0.0,
             omega_explicit=None) -> OscillatorEnsemble:
    if omega_explicit is not None:
        return OscillatorEnsemble(omega_explicit, omega_implicit)
    return OscillatorEnsemble.spanning(omega_max, K, omega_implicit=omega_implicit)


def column(**params) -> AcousticColumn:
    if "modes" in params and params["modes"] is not None:
        params["modes"] = {int(k): float(v) for k, v in params["modes"].items()}
    return AcousticColumn(**params)


PROBLEMS = {
    "split-oscillator": SplitOscillator,
    "ensemble": ensemble,
    "column": column,
    "hv-oscillator": hv_oscillator,
}


def build_problem(problem_id: str, params: dict | None = None):
    try:
        factory = PROBLEMS[problem_id]
    except KeyError:
        raise ConfigError(f"unknown problem {problem_id!r}; choose from {sorted(PROBLEMS)}") from None
    try:
        return factory(**(params or {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"problem {problem_id!r}: {exc}") from None
