"""YAML run configuration.

Schema (all keys optional unless a subcommand needs them)::

    methods: all | [ARS232, DBM453, ...]
    catalog: builtin | path/to/catalog.json
    problem:
      id: split-oscillator | ensemble | column | hv-oscillator
      params: {...}            # constructor arguments, see problems.py
    ladder: [dt, ...]          # descending for converge, ascending for scan
    t_final: 6.283185307179586
    reference: exact | kgu35
    reference_dt: 0.001
    accuracy: 1.0e-3           # scan: stable+accurate threshold
    scales: [1, 10, 100]       # scan: scaling sensitivity
    K: 1                       # energy / floor-study: hyperviscosity substeps
    dt: 0.1                    # energy
    n_steps: 100               # energy
    resolution: 1440           # boundary
    out: reports
    seed: 0
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

SCHEMA_KEYS = {"methods", "catalog", "problem", "ladder", "t_final", "reference", "reference_dt",
               "accuracy", "scales", "K", "dt", "n_steps", "resolution", "out", "seed"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    methods: list[str] | str = "all"
    catalog: str = "builtin"
    problem_id: str = "split-oscillator"
    problem_params: dict = field(default_factory=dict)
    ladder: list[float] | None = None
    t_final: float | None = None
    reference: str = "exact"
    reference_dt: float | None = None
    accuracy: float | None = None
    scales: list[float] = field(default_factory=lambda: [1.0, 10.0, 100.0])
    K: int = 1
    dt: float | None = None
    n_steps: int | None = None
    resolution: int = 1440
    out: str = "reports"
    seed: int = 0


def _number(d, key, kind=float, positive=True):
    if key not in d or d[key] is None:
        return None
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    v = kind(v)
    if positive and not v > 0:
        raise ConfigError(f"{key}: must be positive, got {v!r}")
    return v


def parse_config(data, origin: str = "<config>") -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{origin}: top level must be a mapping")
    unknown = set(data) - SCHEMA_KEYS
    if unknown:
        raise ConfigError(f"{origin}: unknown keys {sorted(unknown)}")
    cfg = RunConfig()
    methods = data.get("methods", "all")
    if methods != "all":
        if not (isinstance(methods, list) and all(isinstance(m, str) for m in methods)):
            raise ConfigError(f"{origin}: methods must be 'all' or a list of names")
    cfg.methods = methods
    cfg.catalog = str(data.get("catalog", "builtin"))
    prob = data.get("problem", {}) or {}
    if isinstance(prob, str):
        prob = {"id": prob}
    if not isinstance(prob, dict):
        raise ConfigError(f"{origin}: problem must be a mapping or an id")
    cfg.problem_id = str(prob.get("id", cfg.problem_id))
    params = prob.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError(f"{origin}: problem.params must be a mapping")
    cfg.problem_params = dict(params)
    if "ladder" in data and data["ladder"] is not None:
        lad = data["ladder"]
        if not isinstance(lad, list) or not lad:
            raise ConfigError(f"{origin}: ladder must be a non-empty list")
        cfg.ladder = [_number({"ladder": v}, "ladder") for v in lad]
    cfg.t_final = _number(data, "t_final")
    cfg.reference = str(data.get("reference", "exact"))
    if cfg.reference not in ("exact", "kgu35"):
        raise ConfigError(f"{origin}: reference must be 'exact' or 'kgu35'")
    cfg.reference_dt = _number(data, "reference_dt")
    cfg.accuracy = _number(data, "accuracy")
    if "scales" in data:
        sc = data["scales"]
        if not isinstance(sc, list) or not sc:
            raise ConfigError(f"{origin}: scales must be a non-empty list")
        cfg.scales = [_number({"scales": v}, "scales") for v in sc]
    K = _number(data, "K", int, positive=False)
    if K is not None:
        if K < 0:
            raise ConfigError(f"{origin}: K must be >= 0")
        cfg.K = K
    cfg.dt = _number(data, "dt")
    cfg.n_steps = _number(data, "n_steps", int)
    res = _number(data, "resolution", int)
    if res is not None:
        cfg.resolution = res
    cfg.out = str(data.get("out", cfg.out))
    seed = _number(data, "seed", int, positive=False)
    if seed is not None:
        cfg.seed = seed
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{p}: invalid YAML: {exc}") from None
    return parse_config(data, str(p))
