"""File outputs: CSV tables and JSON run summaries.

Numbers are written with 17 significant digits ('.' decimal separator,
LF line endings), enough to reproduce every double bit for bit, so a
repeated run with the same seed yields byte-identical CSV bodies.
"""

from __future__ import annotations

import json
import math

import numpy as np


def fmt(x) -> str:
    """One CSV cell: full-precision float or plain int."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_timeseries(path, stats):
    """Ensemble means over time."""
    write_csv(path, ("t", "mean_intensity", "e_kin", "bunching"),
              zip(stats.t, stats.mean_intensity, stats.e_kin,
                  stats.bunching_t))


def write_scan(path, r):
    """One row per grid node, row-major in (axis1, axis2)."""
    header = (r.axis1_name, r.axis2_name, "intensity", "e_kin",
              "e_kin_kappa", "bunching", "cooling_time", "saturation",
              "n_excluded")

    def rows():
        for i, v1 in enumerate(r.axis1_values):
            for j, v2 in enumerate(r.axis2_values):
                yield (v1, v2, r.intensity[i, j], r.e_kin[i, j],
                       r.e_kin_kappa[i, j], r.bunching[i, j],
                       r.cooling_time[i, j], r.saturation[i, j],
                       int(r.n_excluded[i, j]))

    write_csv(path, header, rows())


def write_friction_map(path, fm):
    """f1 on the detuning grid; converged is 0/1."""

    def rows():
        for i, da in enumerate(fm.delta_a):
            for j, dc in enumerate(fm.delta_c):
                yield (da, dc, fm.f1[i, j], int(fm.converged[i, j]))

    write_csv(path, ("delta_a", "delta_c", "f1", "converged"), rows())


def write_histogram(path, h):
    """Folded position bins with the potential curves at bin centers."""

    def rows():
        for k in range(len(h.counts)):
            yield (h.bin_edges[k], h.bin_edges[k + 1], int(h.counts[k]),
                   h.potential_plus[k], h.potential_minus[k])

    write_csv(path, ("bin_left", "bin_right", "count", "potential_plus",
                     "potential_minus"), rows())


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, complex):
        return None if not np.isfinite(v) else [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_json(path, obj):
    """Sidecar summary; NaN/inf and empty branches become null."""
    with open(path, "w", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2)
        fh.write("\n")
