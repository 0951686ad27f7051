"""Readers for the simulator's CSV tables and JSON sidecars.

Tables are plain comma-separated files with one header line; every data
cell parses as a float ("nan" marks undefined entries such as a cooling
time that was never reached).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class TableError(Exception):
    """Unusable input: missing file, empty table, or absent column."""


def read_table(path) -> dict[str, np.ndarray]:
    """Parse a CSV table into a column dict, preserving header order."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise TableError(f"{path}: file is empty") from None
            rows = list(reader)
    except OSError as e:
        raise TableError(f"cannot read {path}: {e}") from None

    if not rows:
        raise TableError(f"{path}: no data rows")
    cols = {}
    for k, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[k]) for r in rows])
        except (ValueError, IndexError) as e:
            raise TableError(
                f"{path}: column {name!r} does not parse: {e}") from None
    return cols


def require_columns(table, names, path="input"):
    missing = [n for n in names if n not in table]
    if missing:
        raise TableError(
            f"{path}: missing column(s) {', '.join(missing)}; "
            f"have {', '.join(table)}")


def read_summary(path) -> dict:
    """Sidecar JSON written next to each table; {} if there is none."""
    path = Path(path)
    if not path.exists():
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise TableError(f"cannot read {path}: {e}") from None


def pivot(table, axis1, axis2, value):
    """Scatter scan rows onto the (axis1, axis2) grid.

    Returns (v1s, v2s, grid) with first-seen axis ordering; grid cells
    with no matching row stay NaN, so partial scans still render.
    """
    a1, a2, val = table[axis1], table[axis2], table[value]
    v1s = list(dict.fromkeys(a1.tolist()))
    v2s = list(dict.fromkeys(a2.tolist()))
    i1 = {v: i for i, v in enumerate(v1s)}
    i2 = {v: i for i, v in enumerate(v2s)}
    grid = np.full((len(v1s), len(v2s)), np.nan)
    for k in range(len(val)):
        grid[i1[a1[k]], i2[a2[k]]] = val[k]
    return np.array(v1s), np.array(v2s), grid
