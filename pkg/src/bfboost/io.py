"""Serialization: the BFB1 binary container and CSV interchange.

BFB1 layout: 4 magic bytes b"BFB1", then rows and cols as little-endian
uint64, then rows*cols float64 entries, little-endian, row major.  Vectors
are stored as single-column matrices.
"""

from __future__ import annotations

import os
import struct

import numpy as np

MAGIC = b"BFB1"
_HEADER = struct.Struct("<4sQQ")


def write_bfb1(path: str | os.PathLike, array: np.ndarray) -> None:
    a = np.asarray(array, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"expected a vector or matrix, got ndim={a.ndim}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, a.shape[0], a.shape[1]))
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_bfb1(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, rows, cols = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        data = np.frombuffer(fh.read(rows * cols * 8), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} entries, found {data.size}")
    return data.reshape(rows, cols).astype(np.float64, copy=True)


def read_vector_bfb1(path: str | os.PathLike) -> np.ndarray:
    a = read_bfb1(path)
    if a.shape[1] != 1:
        raise ValueError(f"{path}: expected a single-column vector, got shape {a.shape}")
    return a[:, 0]


# CSV side: %.17g round-trips float64 exactly, so CSV files are as faithful
# as the binary container, just bigger.

def write_csv_matrix(path: str | os.PathLike, array: np.ndarray) -> None:
    a = np.asarray(array, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    with open(path, "w", newline="") as fh:
        for row in a:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def read_csv_matrix(path: str | os.PathLike) -> np.ndarray:
    a = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return a


def load_array(path: str | os.PathLike) -> np.ndarray:
    """Read a matrix from BFB1 or CSV, decided by the file's magic bytes."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == MAGIC:
        return read_bfb1(path)
    return read_csv_matrix(path)


def load_vector(path: str | os.PathLike) -> np.ndarray:
    a = load_array(path)
    if a.ndim == 2:
        if a.shape[1] != 1:
            raise ValueError(f"{path}: expected one column, got shape {a.shape}")
        a = a[:, 0]
    return a
