"""Deterministic CSV/JSON output and flat config files.

CSV: RFC-4180-style, header row, '.' decimal point, 17 significant digits
(so doubles round-trip byte-identically).  JSON: UTF-8 with sorted keys.
Config files: flat "key = value" lines with '#' comments.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

__all__ = ["format_number", "write_csv", "write_json", "read_config", "write_gnuplot_stub"]


def format_number(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    return str(x)


def write_csv(path, header, rows):
    """Write rows (iterables of scalars) under a header, deterministically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_config(path):
    """Flat key = value file; '#' starts a comment; values stay strings."""
    out = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_gnuplot_stub(path, csv_name, title, x_column, y_columns):
    """Minimal gnuplot script for a CSV written by write_csv; rendering is
    delegated to the user's gnuplot installation."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    plots = ", \\\n    ".join(
        f"'{csv_name}' using {x_column}:{col} with lines title '{name}'"
        for col, name in y_columns
    )
    text = (
        "set datafile separator ','\n"
        f"set title '{title}'\n"
        "set key outside\n"
        f"plot {plots}\n"
    )
    path.write_text(text, encoding="utf-8")
    return path
