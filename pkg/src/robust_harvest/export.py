"""Deterministic flat-file writers.

Floats are written with ``repr`` (shortest string that round-trips), so the
same numbers always produce the same bytes. Every file is written to a
temporary sibling and renamed into place.
"""

from __future__ import annotations

import math
import os
import tempfile

import numpy as np

from .policy import Trajectory, policy_field
from .solver import ValueField

__all__ = [
    "format_number",
    "atomic_write",
    "write_csv",
    "write_value_field",
    "write_policy_field",
    "write_trajectory",
    "write_density",
    "write_report",
]


def format_number(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        # mkstemp creates 0600 files; apply the usual umask-derived mode
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(format_number(v) for v in row) for row in rows)
    atomic_write(path, "\n".join(lines) + "\n")


def _export_rows(field: ValueField, every):
    """Indices of stored rows whose level is a multiple of ``every`` (plus the last)."""
    levels = field.levels
    keep = (levels % every == 0) | (levels == field.grid.I)
    return np.flatnonzero(keep)


def write_value_field(path, field: ValueField, every=1) -> None:
    """Rows ``(i, j, t, n, phi)``; ``every`` thins the time levels."""
    grid = field.grid
    pops = grid.populations

    def rows():
        for k in _export_rows(field, every):
            i = int(field.levels[k])
            t = grid.t0 + i * grid.dt
            for j, (n, phi) in enumerate(zip(pops, field.values[k])):
                yield i, j, t, n, phi

    write_csv(path, ("i", "j", "t", "n", "phi"), rows())


def write_policy_field(path, field: ValueField, every=1) -> None:
    """Rows ``(i, j, t, n, z, c_star)`` for ``j >= 1``."""
    grid = field.grid
    pops = grid.populations
    ks = _export_rows(field, every)
    thinned = ValueField(field.values[ks], field.levels[ks], grid, field.objective,
                         field.growth, field.density)
    z, c = policy_field(thinned)

    def rows():
        for r, k in enumerate(ks):
            i = int(field.levels[k])
            t = grid.t0 + i * grid.dt
            for j in range(1, grid.J + 1):
                yield i, j, t, pops[j], z[r, j - 1], c[r, j - 1]

    write_csv(path, ("i", "j", "t", "n", "z", "c_star"), rows())


def write_trajectory(path, traj: Trajectory) -> None:
    write_csv(path, ("t", "n", "c", "z", "xbar_distorted"), traj.rows())


def write_density(path, nodes, p, columns) -> None:
    """``columns`` maps each mu to the distorted density ``phi * p`` on ``nodes``."""
    header = ["u", "p"] + [f"p_distorted_mu={format_number(mu)}" for mu in columns]
    data = [nodes, p] + [columns[mu] for mu in columns]
    write_csv(path, header, zip(*data))


def write_report(path, items) -> None:
    """``key: value`` lines in the given order."""
    lines = [f"{key}: {format_number(v) if isinstance(v, (float, int, np.number)) and not isinstance(v, bool) else v}"
             for key, v in items]
    atomic_write(path, "\n".join(lines) + "\n")
