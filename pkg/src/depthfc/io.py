"""CSV and JSON file formats used by the command line tool."""

from __future__ import annotations

import csv
import json
from datetime import datetime
from pathlib import Path

import numpy as np

from depthfc.core import MalformedInputError

SERIES_HEADER = ("t", "value")
BAND_HEADER = ("t", "lower", "upper", "point")
CHART_HEADER = ("k", "mean_coverage", "alpha_percentile", "mean_width")


def fmt(x) -> str:
    """Shortest decimal string that reads back to the same float."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (int, float, np.integer, np.floating)) else v for v in row])


def _parse_time(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        return datetime.fromisoformat(token).timestamp()


def read_series(path):
    """Read a ``t,value`` file; returns ``(t, values)`` arrays.

    The first column may hold numbers or ISO timestamps and must increase
    with uniform spacing.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SERIES_HEADER:
            raise MalformedInputError(f"{path}: expected header 't,value', got {header!r}")
        t, v = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise MalformedInputError(f"{path}:{lineno}: expected 2 columns")
            try:
                t.append(_parse_time(row[0].strip()))
                v.append(float(row[1]))
            except ValueError as exc:
                raise MalformedInputError(f"{path}:{lineno}: {exc}") from None
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if t.size == 0:
        raise MalformedInputError(f"{path}: no data rows")
    if not np.all(np.isfinite(v)):
        raise MalformedInputError(f"{path}: non-finite values")
    if t.size > 1:
        steps = np.diff(t)
        if np.any(steps <= 0):
            raise MalformedInputError(f"{path}: first column must be strictly increasing")
        h = steps.mean()
        if np.max(np.abs(steps - h)) > 1e-6 * h:
            raise MalformedInputError(f"{path}: first column is not uniformly spaced")
    return t, v


def write_series(path, t, values):
    write_csv(path, SERIES_HEADER, zip(np.asarray(t, dtype=float), np.asarray(values, dtype=float)))


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
