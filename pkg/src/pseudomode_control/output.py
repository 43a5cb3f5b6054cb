"""CSV and JSON writers.

Numbers are written with ``repr`` (shortest round-trip form, ``.`` decimal
separator, no grouping), so files are byte-identical across identical runs
and parse under a strict reader.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ("t_q", "re_c1", "im_c1", "re_y", "im_y", "pop", "omega")
GRID_COLUMNS = ("t_q", "pop_target", "status", "final_cost")
BOUNDARY_COLUMNS = ("t_q", "pop_omega_zero", "pop_omega_max")
FIELD_COLUMNS = ("t_q", "omega")


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return repr(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def trajectory_rows(times, c1, ys, omegas, q: float = 1.0):
    """Rows for the trajectory CSV; ``ys`` is (n_rows, N) for N effective modes.

    The omega column holds the detuning of the step starting at that row (the
    last row repeats the final step), normalised by q.
    """
    ys = np.asarray(ys).reshape(len(times), -1)
    for k, t in enumerate(times):
        row = [t * q, c1[k].real, c1[k].imag]
        for y in ys[k]:
            row += [y.real, y.imag]
        row += [abs(c1[k]) ** 2, omegas[k] / q]
        yield row


def trajectory_header(n_modes: int = 1) -> list[str]:
    cols = ["t_q", "re_c1", "im_c1", "re_y", "im_y"]
    for k in range(2, n_modes + 1):
        cols += [f"re_y{k}", f"im_y{k}"]
    return cols + ["pop", "omega"]
