"""Matrix file I/O for the CLI: a little-endian binary format and a CSV
alternative.

Binary layout: header [u32 magic 0x53424152, u32 rows, u32 cols] followed by
row-major 64-bit floats. CSV: one matrix row per line, comma separated,
'.' decimal separator.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import InvalidParameter

MAGIC = 0x53424152
_HEADER = struct.Struct("<III")


def save_matrix(path, M, fmt: str = "binary") -> None:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    if M.ndim != 2:
        raise InvalidParameter("only 2-D matrices can be written")
    path = Path(path)
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, M.shape[0], M.shape[1]))
            fh.write(np.ascontiguousarray(M, dtype="<f8").tobytes())
    elif fmt == "csv":
        np.savetxt(path, M, fmt="%.17g", delimiter=",")
    else:
        raise InvalidParameter(f"unknown matrix format {fmt!r}")


def load_matrix(path) -> np.ndarray:
    """Read a matrix written by save_matrix; the format is sniffed from the
    magic bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) >= 4 and struct.unpack("<I", head[:4])[0] == MAGIC:
            if len(head) < _HEADER.size:
                raise InvalidParameter(f"{path}: truncated header")
            _, rows, cols = _HEADER.unpack(head)
            body = fh.read()
            expected = rows * cols * 8
            if len(body) != expected:
                raise InvalidParameter(
                    f"{path}: expected {expected} payload bytes, got {len(body)}"
                )
            return (
                np.frombuffer(body, dtype="<f8")
                .astype(np.float64)
                .reshape(rows, cols)
            )
    try:
        M = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise InvalidParameter(f"{path}: not a valid matrix file: {exc}") from exc
    return M
