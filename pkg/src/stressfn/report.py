"""Run reports and file emission (JSON report, CSV history and fields)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def rel_err(pred, exact):
    """|pred - exact| / |exact|."""
    return abs(pred - exact) / abs(exact)


def l2_err(pred, exact):
    """||pred - exact||_2 / ||exact||_2."""
    pred = np.asarray(pred, dtype=float)
    exact = np.asarray(exact, dtype=float)
    return float(np.linalg.norm(pred - exact) / np.linalg.norm(exact))


@dataclass
class RunReport:
    problem: str
    method: str
    seed: int
    iterations: int
    converged: bool
    seconds: float
    energies: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    field_errors: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=float)


def write_report(path, report):
    Path(path).write_text(report.to_json() + "\n", encoding="utf-8")


def write_history_csv(path, losses):
    lines = ["iteration,loss"]
    lines += [f"{i},{v!r}" for i, v in enumerate(np.asarray(losses, dtype=float))]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_fields_csv(path, columns):
    """``columns`` is an ordered {name: array}; all arrays share a length."""
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("field columns must share a length")
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(repr(float(a[i])) for a in arrays))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_timing_json(path, method_seconds):
    Path(path).write_text(json.dumps(method_seconds, indent=2, sort_keys=True)
                          + "\n", encoding="utf-8")


def write_summary_csv(path, header, rows, footer_rows=()):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    for row in footer_rows:
        lines.append(",".join(_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def mean_std_cell(values):
    """Footer cell in the 'mean +/- std' style of the reference tables."""
    arr = np.asarray(values, dtype=float)
    return f"{arr.mean():.6g}+/-{arr.std():.6g}"
