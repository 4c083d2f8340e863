"""CSV and JSON report writers.

Every CSV starts with a ``# schema_version: N`` line followed by the header.
JSON reports hold ``schema_version``, ``report``, ``columns``, ``rows`` and
``diagnostics``; the creation timestamp lives only under ``metadata`` so the
rest of the payload is deterministic.
"""
from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__
from ..tridiag import BACKEND

SCHEMA_VERSION = 1

COLUMNS = {
    "certify": ["method", "f_I", "f_E", "order_E", "order_I", "order_A", "stage_order_E",
                "stage_order_I", "stage_order_A", "A", "L", "B", "SA_DIRK", "SA_ERK", "b", "c",
                "max_exp", "order_source", "mismatches"],
    "boundary": ["re", "im", "which"],
    "converge": ["method", "problem", "dt", "error", "floor", "in_fit", "alpha", "beta",
                 "failure"],
    "scan": ["method", "problem", "dt", "outcome", "steps", "error", "dt_per_f_I",
             "dt_per_f_E"],
    "scaling": ["method", "problem", "scale", "dt_max", "ratio"],
    "energy": ["method", "problem", "dt", "hyperviscosity", "K", "time", "drift"],
    "energy_summary": ["method", "dt", "hyperviscosity", "K", "max_abs_drift", "final_drift",
                       "failure"],
    "methods": ["method", "order", "f_I", "f_E", "source", "provenance"],
}


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_csv(path, report: str, rows: list[dict]) -> Path:
    cols = COLUMNS[report]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema_version: {SCHEMA_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in cols])
    return path


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# schema_version:"):
            raise ValueError(f"{path}: missing schema_version header")
        return list(csv.DictReader(fh))


def json_payload(report: str, rows: list[dict], diagnostics: dict | None = None) -> dict:
    return {"schema_version": SCHEMA_VERSION, "report": report, "columns": COLUMNS[report],
            "rows": _jsonable(rows), "diagnostics": _jsonable(diagnostics or {})}


def write_json(path, report: str, rows: list[dict], diagnostics: dict | None = None,
               config: dict | None = None) -> Path:
    payload = json_payload(report, rows, diagnostics)
    payload["metadata"] = {"created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                           "version": __version__, "backend": BACKEND,
                           "config": _jsonable(config or {})}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_report(out_dir, name: str, report: str, rows: list[dict],
                 diagnostics: dict | None = None, config: dict | None = None) -> list[Path]:
    out = Path(out_dir)
    return [write_csv(out / f"{name}.csv", report, rows),
            write_json(out / f"{name}.json", report, rows, diagnostics, config)]
