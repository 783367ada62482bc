"""Readers and writers for matrices, edge lists, labels, couplings and traces.

Numeric values are written with 17 significant digits so a write/read round
trip reproduces float64 values exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .errors import InvalidInput

__all__ = [
    "read_matrix",
    "write_matrix",
    "read_embedding",
    "write_embedding",
    "read_edge_list",
    "write_edge_list",
    "read_labels",
    "write_labels",
    "read_match_indices",
    "read_coupling_triplets",
    "write_coupling_triplets",
    "write_trace",
    "write_json",
    "sha256_file",
]

FLOAT_FMT = "%.17g"
SPARSE_DROP = 1e-12


def read_matrix(path, delimiter: str = ",", header: bool = False) -> np.ndarray:
    """Dense matrix from a delimited text file; one row per line."""
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=delimiter, skiprows=1 if header else 0, ndmin=2)
    except OSError as exc:
        raise InvalidInput(f"{path}: {exc}") from exc
    except ValueError as exc:
        raise InvalidInput(f"{path}: parse error: {exc}") from exc
    if data.size == 0:
        raise InvalidInput(f"{path}: empty matrix")
    return data


def write_matrix(path, m: np.ndarray, delimiter: str = ",") -> None:
    np.savetxt(path, np.atleast_2d(m), fmt=FLOAT_FMT, delimiter=delimiter)


def write_embedding(path, z: np.ndarray, delimiter: str = ",") -> None:
    """Embedding CSV: leading 0-based row index column, then coordinates."""
    z = np.atleast_2d(z)
    with open(path, "w") as fh:
        for i, row in enumerate(z):
            fh.write(delimiter.join([str(i)] + [FLOAT_FMT % v for v in row]) + "\n")


def read_embedding(path, delimiter: str = ",") -> np.ndarray:
    """Read an embedding CSV written by :func:`write_embedding`."""
    m = read_matrix(path, delimiter=delimiter)
    if m.shape[1] < 2 or not np.array_equal(m[:, 0], np.arange(m.shape[0])):
        raise InvalidInput(
            f"{path}: expected an embedding file with a leading row-index column"
        )
    return m[:, 1:]


def read_edge_list(path) -> tuple[list[tuple[int, int, float]], int]:
    """Whitespace-delimited ``i j [weight]`` lines with 0-based node ids.

    Returns the edges (self-loops included; callers decide) and the node
    count inferred from the largest id.
    """
    path = Path(path)
    edges: list[tuple[int, int, float]] = []
    max_id = -1
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InvalidInput(f"{path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) not in (2, 3):
            raise InvalidInput(f"{path}:{lineno}: expected 'i j [weight]', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as exc:
            raise InvalidInput(f"{path}:{lineno}: {exc}") from exc
        if i < 0 or j < 0:
            raise InvalidInput(f"{path}:{lineno}: node ids must be nonnegative")
        edges.append((i, j, w))
        max_id = max(max_id, i, j)
    if max_id < 0:
        raise InvalidInput(f"{path}: no edges found")
    return edges, max_id + 1


def write_edge_list(path, edges) -> None:
    with open(path, "w") as fh:
        for i, j, w in edges:
            fh.write(f"{i} {j} {FLOAT_FMT % w}\n")


def read_labels(path) -> np.ndarray:
    """One integer label per line."""
    path = Path(path)
    try:
        labels = np.loadtxt(path, dtype=int, ndmin=1)
    except (OSError, ValueError) as exc:
        raise InvalidInput(f"{path}: {exc}") from exc
    return labels


def write_labels(path, labels) -> None:
    np.savetxt(path, np.asarray(labels, dtype=int), fmt="%d")


def read_match_indices(path) -> np.ndarray:
    """Ground-truth match: line i holds the matched column index of row i."""
    idx = read_labels(path)
    if np.any(idx < 0):
        raise InvalidInput(f"{path}: match indices must be nonnegative")
    return idx


def write_coupling_triplets(path, p: np.ndarray, drop: float = SPARSE_DROP) -> None:
    """Sparse ``i j value`` text; entries below ``drop`` are omitted."""
    p = np.asarray(p, dtype=float)
    with open(path, "w") as fh:
        fh.write(f"# {p.shape[0]} {p.shape[1]}\n")
        for i, j in zip(*np.nonzero(p >= drop)):
            fh.write(f"{i} {j} {FLOAT_FMT % p[i, j]}\n")


def read_coupling_triplets(path) -> np.ndarray:
    path = Path(path)
    lines = path.read_text().splitlines()
    shape = None
    entries = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            parts = stripped[1:].split()
            if shape is None and len(parts) == 2:
                shape = (int(parts[0]), int(parts[1]))
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise InvalidInput(f"{path}:{lineno}: expected 'i j value'")
        entries.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if shape is None:
        if not entries:
            raise InvalidInput(f"{path}: empty coupling file")
        shape = (max(e[0] for e in entries) + 1, max(e[1] for e in entries) + 1)
    p = np.zeros(shape)
    for i, j, v in entries:
        p[i, j] = v
    return p


def write_trace(path, records) -> None:
    """JSON-lines trace, one record per line."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_json(path, doc) -> None:
    """Atomic JSON write (temp file + rename)."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
