"""Plain-text CSV and key=value file helpers."""

from __future__ import annotations

import csv
import os

import numpy as np

__all__ = [
    "FormatError",
    "read_matrix",
    "read_vector",
    "write_matrix",
    "write_vector",
    "read_keyvalue",
    "write_keyvalue",
    "format_float",
]


class FormatError(ValueError):
    """Raised on malformed input files."""


def format_float(v):
    # repr round-trips and is platform independent
    return repr(float(v))


def read_matrix(path):
    """Read a dense matrix, one row per line. Ragged rows are rejected."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not cells or all(c == "" for c in cells):
                continue
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric entry") from None
            if len(rows[-1]) != len(rows[0]):
                raise FormatError(
                    f"{path}:{lineno}: ragged row ({len(rows[-1])} vs {len(rows[0])} columns)")
    if not rows:
        raise FormatError(f"{path}: empty matrix file")
    return np.array(rows, dtype=float)


def read_vector(path):
    """Read a vector stored either as a single row or a single column."""
    M = read_matrix(path)
    if M.shape[0] != 1 and M.shape[1] != 1:
        raise FormatError(f"{path}: expected a single row or column, got shape {M.shape}")
    return M.reshape(-1)


def write_matrix(path, A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    with open(path, "w", newline="") as fh:
        for row in A:
            fh.write(",".join(format_float(v) for v in row) + "\n")


def write_vector(path, x):
    """Write a vector as a column (one entry per line)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    with open(path, "w", newline="") as fh:
        for v in x:
            fh.write(format_float(v) + "\n")


def read_keyvalue(path):
    """Parse a flat ``key=value`` file. ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_keyvalue(path, mapping):
    with open(path, "w") as fh:
        for key, value in mapping.items():
            fh.write(f"{key}={value}\n")


def resolve(base, name):
    """Resolve ``name`` relative to the directory of file ``base``."""
    if os.path.isabs(name):
        return name
    return os.path.join(os.path.dirname(os.path.abspath(base)), name)
