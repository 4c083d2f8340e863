"""Butcher tableaux, ARK method records and the coefficient catalog.

Coefficients live in a JSON file as decimal strings. Each string is parsed
once with ``float`` (correctly rounded), so every platform sees the same
binary64 values. The built-in catalog ships as package data.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

SCHEMA_VERSION = 1
BUILTIN = "builtin"
ROW_SUM_TOL = 1e-13
_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class CatalogError(ValueError):
    """Malformed coefficient file or a method that violates a tableau invariant."""


class UnknownMethodError(KeyError):
    pass


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ButcherTableau:
    """One Runge-Kutta coefficient set (A, b, c).

    ``kind`` is "explicit" when A is strictly lower triangular and "dirk"
    when some diagonal entry is nonzero.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _frozen(self.A))
        object.__setattr__(self, "b", _frozen(self.b))
        object.__setattr__(self, "c", _frozen(self.c))

    @property
    def stages(self) -> int:
        return len(self.b)

    @property
    def kind(self) -> str:
        return "dirk" if np.any(np.diag(self.A) != 0.0) else "explicit"

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.A)

    def validate(self, label: str = "tableau") -> None:
        """Raise CatalogError if a structural invariant fails."""
        s = self.stages
        if self.A.shape != (s, s) or self.c.shape != (s,):
            raise CatalogError(f"{label}: shapes A{self.A.shape}, b({s},), c{self.c.shape} disagree")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))
                and np.all(np.isfinite(self.c))):
            raise CatalogError(f"{label}: non-finite coefficient")
        if np.any(np.triu(self.A, 1) != 0.0):
            i, j = np.argwhere(np.triu(self.A, 1) != 0.0)[0]
            raise CatalogError(f"{label}: A[{i + 1},{j + 1}] above the diagonal is nonzero")
        if np.any(np.diag(self.A) < 0.0):
            i = int(np.argmax(np.diag(self.A) < 0.0))
            raise CatalogError(f"{label}: negative diagonal entry in row {i + 1}")
        rows = self.A.sum(axis=1)
        bad = np.abs(rows - self.c) > ROW_SUM_TOL
        if np.any(bad):
            i = int(np.argmax(bad))
            raise CatalogError(
                f"{label}: row {i + 1} sums to {rows[i]!r} but c_{i + 1} = {self.c[i]!r}")


@dataclass(frozen=True, eq=False)
class ARKMethod:
    """An explicit/implicit tableau pair with its declared metadata."""

    name: str
    explicit: ButcherTableau
    implicit: ButcherTableau
    declared_order: int
    declared_implicit_solves: int
    declared_explicit_evals: int
    is_pure_explicit: bool = False
    source: str = ""
    provenance: str = "published"
    expected: dict | None = field(default=None, repr=False)

    @property
    def stages(self) -> int:
        return self.explicit.stages

    @property
    def explicit_tableau(self) -> ButcherTableau:
        return self.explicit

    @property
    def implicit_tableau(self) -> ButcherTableau:
        return self.implicit

    def validate(self) -> None:
        self.explicit.validate(f"{self.name} explicit")
        self.implicit.validate(f"{self.name} implicit")
        if self.explicit.kind != "explicit":
            raise CatalogError(f"{self.name}: explicit tableau has a nonzero diagonal")
        if self.explicit.stages != self.implicit.stages:
            raise CatalogError(f"{self.name}: explicit and implicit stage counts differ")
        solves = int(np.count_nonzero(self.implicit.diagonal))
        if solves != self.declared_implicit_solves:
            raise CatalogError(
                f"{self.name}: declares {self.declared_implicit_solves} implicit solves "
                f"but the implicit diagonal has {solves} nonzero entries")
        if self.is_pure_explicit and np.any(self.implicit.A != 0.0):
            raise CatalogError(f"{self.name}: pure explicit method with nonzero implicit tableau")

    @cached_property
    def explicit_used(self) -> np.ndarray:
        """Stages whose explicit tendency feeds a later stage or the update."""
        return _columns_used(self.explicit)

    @cached_property
    def implicit_used(self) -> np.ndarray:
        return _columns_used(self.implicit)


def _columns_used(tab: ButcherTableau) -> np.ndarray:
    below = np.tril(tab.A, -1) != 0.0
    return below.any(axis=0) | (tab.b != 0.0)


# --- parsing ------------------------------------------------------------------

def _parse_number(value: Any, where: str) -> float:
    if not isinstance(value, str) or not _DECIMAL.match(value.strip()):
        raise CatalogError(f"{where}: expected a decimal string, got {value!r}")
    return float(value)


def _parse_vector(value: Any, where: str) -> list[float]:
    if not isinstance(value, list):
        raise CatalogError(f"{where}: expected an array")
    return [_parse_number(v, f"{where}[{k}]") for k, v in enumerate(value)]


def _parse_tableau(rec: Any, where: str) -> ButcherTableau:
    if not isinstance(rec, dict):
        raise CatalogError(f"{where}: expected an object with A, b, c")
    for key in ("A", "b", "c"):
        if key not in rec:
            raise CatalogError(f"{where}.{key}: missing")
    if not isinstance(rec["A"], list):
        raise CatalogError(f"{where}.A: expected an array of rows")
    A = [_parse_vector(row, f"{where}.A[{i}]") for i, row in enumerate(rec["A"])]
    b = _parse_vector(rec["b"], f"{where}.b")
    c = _parse_vector(rec["c"], f"{where}.c")
    s = len(b)
    if len(A) != s or any(len(r) != s for r in A) or len(c) != s:
        raise CatalogError(f"{where}: A, b, c sizes disagree (b has {s} entries)")
    return ButcherTableau(np.array(A, dtype=float).reshape(s, s), b, c)


def _require(rec: dict, key: str, kind, where: str):
    if key not in rec:
        raise CatalogError(f"{where}.{key}: missing")
    val = rec[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise CatalogError(f"{where}.{key}: expected an integer")
    if kind is not int and not isinstance(val, kind):
        raise CatalogError(f"{where}.{key}: expected {kind.__name__}")
    return val


def parse_catalog(text: str, origin: str = "<string>") -> list[ARKMethod]:
    """Parse coefficient-file text into validated methods."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{origin}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise CatalogError(f"{origin}: top level must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise CatalogError(f"{origin}: schema_version {version!r} unsupported "
                           f"(expected {SCHEMA_VERSION})")
    records = doc.get("methods")
    if not isinstance(records, list):
        raise CatalogError(f"{origin}: methods: expected an array")
    methods, seen = [], set()
    for k, rec in enumerate(records):
        where = f"{origin}: methods[{k}]"
        if not isinstance(rec, dict):
            raise CatalogError(f"{where}: expected an object")
        name = _require(rec, "name", str, where)
        where = f"{origin}: methods[{k}] ({name})"
        if name in seen:
            raise CatalogError(f"{where}: duplicate method name")
        seen.add(name)
        method = ARKMethod(
            name=name,
            explicit=_parse_tableau(rec.get("explicit"), f"{where}.explicit"),
            implicit=_parse_tableau(rec.get("implicit"), f"{where}.implicit"),
            declared_order=_require(rec, "declared_order", int, where),
            declared_implicit_solves=_require(rec, "implicit_solves", int, where),
            declared_explicit_evals=_require(rec, "explicit_evals", int, where),
            is_pure_explicit=bool(rec.get("pure_explicit", False)),
            source=str(rec.get("source", "")),
            provenance=str(rec.get("provenance", "published")),
            expected=rec.get("expected"),
        )
        method.validate()
        methods.append(method)
    return methods


def load_catalog(path: str | Path = BUILTIN) -> list[ARKMethod]:
    """Load a coefficient file, or the built-in catalog for ``BUILTIN``."""
    if str(path) == BUILTIN:
        return list(_builtin())
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise CatalogError(f"{p}: cannot read ({exc.strerror})") from None
    return parse_catalog(text, str(p))


@lru_cache(maxsize=1)
def _builtin() -> tuple[ARKMethod, ...]:
    text = resources.files("arkimex").joinpath("data/catalog.json").read_text(encoding="utf-8")
    return tuple(parse_catalog(text, "builtin catalog"))


def builtin_catalog_path() -> Path:
    return Path(str(resources.files("arkimex").joinpath("data/catalog.json")))


def method_names() -> list[str]:
    return [m.name for m in _builtin()]


def get_method(name: str, catalog: list[ARKMethod] | None = None) -> ARKMethod:
    """Exact, case-sensitive lookup."""
    for m in (catalog if catalog is not None else _builtin()):
        if m.name == name:
            return m
    raise UnknownMethodError(f"unknown method {name!r}")


def dbm453() -> ARKMethod:
    return get_method("DBM453")


# --- serialization --------------------------------------------------------------

def _fmt(x: float) -> str:
    # repr is the shortest string that parses back to the same double
    return "0" if x == 0.0 else repr(float(x))


def _tableau_record(t: ButcherTableau) -> dict:
    return {"A": [[_fmt(x) for x in row] for row in t.A],
            "b": [_fmt(x) for x in t.b],
            "c": [_fmt(x) for x in t.c]}


def serialize_catalog(methods: list[ARKMethod]) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "methods": []}
    for m in methods:
        doc["methods"].append({
            "name": m.name,
            "declared_order": m.declared_order,
            "implicit_solves": m.declared_implicit_solves,
            "explicit_evals": m.declared_explicit_evals,
            "pure_explicit": m.is_pure_explicit,
            "source": m.source,
            "provenance": m.provenance,
            "explicit": _tableau_record(m.explicit),
            "implicit": _tableau_record(m.implicit),
            "expected": m.expected,
        })
    return json.dumps(doc, indent=1) + "\n"


def make_method(name: str, A_E, b_E, A_I, b_I, *, order: int, c_E=None, c_I=None,
                explicit_evals: int | None = None, pure_explicit: bool = False) -> ARKMethod:
    """Build and validate a method from float arrays (for tests and user code)."""
    A_E = np.atleast_2d(np.array(A_E, dtype=float))
    A_I = np.atleast_2d(np.array(A_I, dtype=float))
    ex = ButcherTableau(A_E, b_E, A_E.sum(axis=1) if c_E is None else c_E)
    im = ButcherTableau(A_I, b_I, A_I.sum(axis=1) if c_I is None else c_I)
    solves = int(np.count_nonzero(np.diag(A_I)))
    m = ARKMethod(name, ex, im, order, solves,
                  explicit_evals if explicit_evals is not None else len(ex.b),
                  is_pure_explicit=pure_explicit)
    m.validate()
    return m
