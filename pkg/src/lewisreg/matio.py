"""Matrix and vector file formats.

Text: one matrix row per line, comma- or whitespace-separated decimals.
Binary: 8-byte magic "DMATv001", little-endian u64 rows, u64 cols, then
rows*cols little-endian IEEE float64 values in row-major order.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .linalg import as_matrix, as_vector

MAGIC = b"DMATv001"


def save_matrix_csv(path, A) -> None:
    A = as_matrix(A)
    np.savetxt(path, A, delimiter=",", fmt="%.17g")


def save_matrix_binary(path, A) -> None:
    A = as_matrix(A)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<QQ", A.shape[0], A.shape[1]))
        f.write(np.ascontiguousarray(A, dtype="<f8").tobytes())


def load_matrix(path) -> np.ndarray:
    """Load either format; binary is detected by its magic bytes."""
    data = Path(path).read_bytes()
    if data[:8] == MAGIC:
        return _parse_binary(data, str(path))
    return _parse_text(data.decode("utf-8"), str(path))


def _parse_binary(data: bytes, name: str) -> np.ndarray:
    if len(data) < 24:
        raise ValueError(f"{name}: truncated binary matrix header")
    rows, cols = struct.unpack("<QQ", data[8:24])
    expected = 24 + 8 * rows * cols
    if len(data) != expected:
        raise ValueError(
            f"{name}: binary payload is {len(data)} bytes, expected {expected}"
        )
    A = np.frombuffer(data, dtype="<f8", offset=24).reshape(rows, cols)
    return as_matrix(A, name)


def _parse_text(text: str, name: str) -> np.ndarray:
    A = np.loadtxt(io.StringIO(text.replace(",", " ")), ndmin=2)
    return as_matrix(A, name)


def save_vector(path, v) -> None:
    np.savetxt(path, as_vector(v), fmt="%.17g")


def load_vector(path) -> np.ndarray:
    v = np.loadtxt(path, ndmin=1)
    return as_vector(v, str(path))
