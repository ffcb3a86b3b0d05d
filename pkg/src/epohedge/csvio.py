"""CSV output with a provenance comment line, and the matching reader."""
from __future__ import annotations

import csv
import io
import math

import numpy as np

FLOAT_FORMAT = ".16e"


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "nan" if math.isnan(value) else format(value, FLOAT_FORMAT)
    return str(value)


def format_csv(columns: dict, provenance: dict | None = None) -> str:
    """Render named, equal-length columns; an optional ``# key=value, ...`` line comes first."""
    names = list(columns)
    data = [list(np.ravel(columns[n])) if np.ndim(columns[n]) else [columns[n]] for n in names]
    lengths = {len(c) for c in data}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")
    buf = io.StringIO()
    if provenance:
        buf.write("# " + ", ".join(f"{k}={v}" for k, v in provenance.items()) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for row in zip(*data):
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def emit_csv(columns: dict, path, provenance: dict | None = None) -> None:
    """Write ``columns`` to ``path`` as UTF-8 CSV (header only for an empty table)."""
    text = format_csv(columns, provenance)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _parse(value: str):
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def parse_csv(text: str) -> tuple[dict, dict]:
    """Columns and provenance of a CSV produced by :func:`format_csv`.

    Lines starting with ``#`` are comments; the first one is read as
    provenance.  Numeric cells become int or float.
    """
    provenance = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            if not provenance:
                for item in line[1:].split(","):
                    key, _, value = item.strip().partition("=")
                    if key:
                        provenance[key] = value
            continue
        body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        return {}, provenance
    names = rows[0]
    columns = {n: [] for n in names}
    for row in rows[1:]:
        if len(row) != len(names):
            raise ValueError("ragged CSV row")
        for n, v in zip(names, row):
            columns[n].append(_parse(v))
    return columns, provenance


def read_csv(path) -> tuple[dict, dict]:
    with open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read())
