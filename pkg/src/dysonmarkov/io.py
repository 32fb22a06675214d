"""CSV/JSON emission with atomic writes and round-trip float formatting."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np


def _atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_table(header, table) -> str:
    table = np.atleast_2d(np.asarray(table, dtype=float))
    lines = [",".join(header)]
    lines += [",".join(f"{x:.17g}" for x in row) for row in table]
    return "\n".join(lines) + "\n"


def write_csv(path, header, table) -> Path:
    return _atomic_write(path, format_table(header, table))


def read_csv(path):
    """Return ``(header, table)`` for a file written by :func:`write_csv`."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, table


def write_json(path, doc) -> Path:
    return _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def series_table(times, names, table):
    return ["time"] + list(names), np.column_stack([times, table])
