"""Result rows and their CSV / JSON serialisation.

Floats are written with 17 significant digits so that every value
round-trips exactly; unused columns are left empty (CSV) or null (JSON).
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Optional

import numpy as np

from ..embeddings import matrix_from_json

CSV_HEADER = (
    "experiment",
    "seed",
    "step",
    "eta",
    "loss",
    "delta",
    "min_prob",
    "max_prob",
    "rho",
    "h_norm",
    "erank",
    "top10e",
    "q_ratio",
)
INT_COLUMNS = ("seed", "step")


def make_row(experiment: str, **values) -> dict:
    unknown = set(values) - set(CSV_HEADER)
    if unknown:
        raise KeyError(f"unknown result columns {sorted(unknown)}")
    row = {col: None for col in CSV_HEADER}
    row["experiment"] = experiment
    for key, val in values.items():
        if val is None:
            continue
        if key in INT_COLUMNS:
            row[key] = int(val)
        else:
            val = float(val)
            if not math.isfinite(val):
                raise ValueError(f"non-finite value {val} for column {key}")
            row[key] = val
    return row


def _fmt(val) -> str:
    if val is None:
        return ""
    if isinstance(val, float):
        return format(val, ".17g")
    return str(val)


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in CSV_HEADER])
    return buf.getvalue()


def rows_to_json(rows: Iterable[dict]) -> str:
    items = []
    for row in rows:
        parts = []
        for col in CSV_HEADER:
            val = row.get(col)
            token = "null" if val is None else (_fmt(val) if isinstance(val, (int, float)) else json.dumps(val))
            parts.append(f"{json.dumps(col)}: {token}")
        items.append("{" + ", ".join(parts) + "}")
    return "[\n" + ",\n".join(items) + "\n]\n" if items else "[]\n"


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_csv(rows: Iterable[dict], path: str) -> None:
    _write(path, rows_to_csv(rows))


def emit_json(rows: Iterable[dict], path: str) -> None:
    _write(path, rows_to_json(rows))


def emit(rows: list, path: Optional[str]) -> None:
    if path is None:
        return
    if path.endswith(".json"):
        emit_json(rows, path)
    else:
        emit_csv(rows, path)


def read_json_rows(path: str) -> list:
    with open(path) as fh:
        doc = json.load(fh)
    return [make_row(**{k: v for k, v in row.items()}) for row in doc]


def read_csv_rows(path: str) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: header does not match {CSV_HEADER}")
        out = []
        for rec in reader:
            vals = {k: (None if v == "" else v) for k, v in rec.items() if k != "experiment"}
            out.append(make_row(rec["experiment"], **vals))
        return out


def load_matrices(path: str) -> list:
    """Matrices from a dump: one {rows, cols, values} object, a list of them,
    ``{"matrices": [...]}``, or a trajectory ``{"weights": [...]}``."""
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict) and "values" in doc:
        items = [doc]
    elif isinstance(doc, dict):
        items = doc.get("matrices") or doc.get("weights")
        if items is None:
            raise ValueError(f"{path}: expected a matrix dump or a 'matrices' list")
    else:
        items = doc
    return [matrix_from_json(item) for item in items]


def dump_matrices(mats: Iterable[np.ndarray], path: str) -> None:
    from ..embeddings import matrix_to_json

    _write(path, json.dumps({"matrices": [matrix_to_json(np.asarray(m)) for m in mats]}))
