"""CSV and JSON readers/writers with stable, locale-free formatting."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .estimators import ReturnPanel

SCHEMA_VERSION = 1


def schema(kind: str) -> str:
    return f"gcmport.{kind}/v{SCHEMA_VERSION}"


def _fmt(v) -> str:
    return repr(float(v))


def write_panel(path, panel: ReturnPanel) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset", *panel.timestamps])
        for aid, row in zip(panel.asset_ids, panel.values):
            w.writerow([aid, *map(_fmt, row)])


def read_panel(path) -> ReturnPanel:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise ValueError(f"{path}: a panel needs a header and at least two asset rows")
    header, body = rows[0], rows[1:]
    ids = [r[0] for r in body]
    values = np.array([[float(v) for v in r[1:]] for r in body])
    return ReturnPanel(values, ids, header[1:])


def write_matrix(path, matrix: np.ndarray, ids) -> None:
    """Square matrix: header row of asset ids, then one numeric row per asset."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ids))
        for row in matrix:
            w.writerow(list(map(_fmt, row)))


def read_matrix(path) -> tuple[np.ndarray, list]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header, body = rows[0], rows[1:]
    # Tolerate a leading label column.
    if len(header) == len(body) + 1 and header[0].strip().lower() in ("", "asset"):
        header = header[1:]
        body = [r[1:] for r in body]
    m = np.array([[float(v) for v in r] for r in body])
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(header):
        raise ValueError(f"{path}: expected a square matrix with one header id per column")
    return m, header


def write_table(path, rows: list[dict], columns=None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "nan" if not np.isfinite(v) else _fmt(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, payload: dict, kind: str) -> None:
    doc = {"schema": schema(kind), **_jsonable(payload)}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
                          encoding="utf-8")
