"""MSRM: a minimal binary container for one float64 matrix.

Layout (little endian)::

    b"MSRM" | version u32 = 1 | rows u64 | cols u64 | rows*cols float64, column-major
"""

from __future__ import annotations

import os
import struct

import numpy as np

MAGIC = b"MSRM"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


class MsrmError(OSError):
    pass


def write_msrm(path, M) -> None:
    M = np.asarray(M, dtype="<f8")
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise ValueError("MSRM holds 2D matrices only")
    rows, cols = M.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, rows, cols))
        fh.write(M.tobytes(order="F"))


def read_msrm(path) -> np.ndarray:
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise MsrmError(f"{path}: truncated header")
        magic, version, rows, cols = _HEADER.unpack(head)
        if magic != MAGIC:
            raise MsrmError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise MsrmError(f"{path}: unsupported version {version}")
        payload = fh.read()
    if len(payload) != 8 * rows * cols:
        raise MsrmError(f"{path}: payload is {len(payload)} bytes, expected {8 * rows * cols}")
    return np.frombuffer(payload, dtype="<f8").reshape((rows, cols), order="F").astype(float)
