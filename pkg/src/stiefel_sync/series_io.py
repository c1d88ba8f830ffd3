"""CSV emission and parsing for trajectory diagnostics.

Values are written with 17 significant digits so a parse of the emitted file
reproduces every float bit for bit; runs with the same configuration and
seeds therefore produce byte-identical files.
"""

from __future__ import annotations

import os
from typing import Mapping

import numpy as np

from .errors import DimensionError, ValidationError
from .integrate import Trajectory

_FORMAT = "%.17g"


def emit_series(traj: Trajectory, diag: Mapping[str, np.ndarray], path) -> None:
    """Write a trajectory and aligned diagnostic columns as CSV.

    Base columns are t, drift, diam_S; the ``diag`` mapping appends extra
    columns in its iteration order. Rows are in time order. Nothing is
    written unless all columns validate, so there are no partial files.
    """
    if len(traj) == 0:
        raise ValidationError("refusing to emit an empty trajectory")
    columns: dict[str, np.ndarray] = {
        "t": traj.times,
        "drift": traj.drift,
        "diam_S": traj.diameters,
    }
    for name, values in diag.items():
        if name in columns:
            raise ValidationError(f"duplicate column name {name!r}")
        values = np.asarray(values, dtype=float)
        if values.shape != traj.times.shape:
            raise DimensionError(
                f"column {name!r} has length {values.shape}, expected {traj.times.shape}"
            )
        columns[name] = values

    names = list(columns)
    rows = len(traj)
    lines = [",".join(names)]
    for k in range(rows):
        lines.append(",".join(_FORMAT % columns[name][k] for name in names))
    text = "\n".join(lines) + "\n"
    tmp = f"{path}.tmp"
    with open(tmp, "w") as handle:
        handle.write(text)
    os.replace(tmp, path)


def read_series(path) -> dict[str, np.ndarray]:
    """Parse a CSV written by :func:`emit_series` back into named columns."""
    with open(path) as handle:
        header = handle.readline().strip()
        if not header:
            raise ValidationError(f"{path}: empty series file")
        names = header.split(",")
        data = np.loadtxt(handle, delimiter=",", ndmin=2)
    if data.shape[1] != len(names):
        raise DimensionError(
            f"{path}: {data.shape[1]} columns of data under {len(names)} headers"
        )
    return {name: data[:, k] for k, name in enumerate(names)}
