"""Deterministic CSV, JSON and plot-data writers.

Floats are written with repr-exact formatting so identical inputs give
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, complex):
        return {"re": _clean(v.real), "im": _clean(v.imag)}
    return v


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n"


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return repr(v)
    return str(v)


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_report(out_dir, name: str, rows, summary: dict, fmt: str = "json") -> list:
    """Write ``name``.csv (rows, header first) or ``name``.json (summary plus rows)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = out / f"{name}.csv"
        path.write_text(to_csv(rows))
        side = out / f"{name}.summary.json"
        side.write_text(to_json(summary))
        return [path, side]
    if fmt == "json":
        head, body = rows[0], rows[1:]
        path = out / f"{name}.json"
        path.write_text(to_json({"summary": summary, "columns": list(head), "rows": [list(r) for r in body]}))
        return [path]
    raise ValueError(f"unknown format {fmt!r}")


def write_plot_data(path, x, y) -> Path:
    """Two-column whitespace-separated (x, y) text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{float(a)!r} {float(b)!r}" for a, b in zip(np.asarray(x).ravel(), np.asarray(y).ravel())]
    path.write_text("\n".join(lines) + "\n")
    return path
