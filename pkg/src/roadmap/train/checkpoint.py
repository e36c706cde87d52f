"""Binary checkpoint: 16-byte little-endian header then row-major float64 payload.

Header layout: magic ``b"RDMP"``, version (u32), rows (u32), cols (u32).
"""

import struct
from pathlib import Path

import numpy as np

MAGIC = b"RDMP"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class CheckpointError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def save_checkpoint(params, path) -> None:
    arr = np.ascontiguousarray(params, dtype="<f8")
    if arr.ndim != 2:
        raise ValueError("checkpoint parameters must be a 2-d matrix")
    rows, cols = arr.shape
    Path(path).write_bytes(_HEADER.pack(MAGIC, VERSION, rows, cols) + arr.tobytes())


def load_checkpoint(path, expected_shape=None) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CheckpointError(f"truncated header: {len(data)} of {_HEADER.size} bytes", len(data))
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise CheckpointError(f"unsupported version {version}", 4)
    want = rows * cols * 8
    have = len(data) - _HEADER.size
    if have != want:
        kind = "truncated payload" if have < want else "trailing bytes after payload"
        raise CheckpointError(
            f"{kind}: header says {rows}x{cols} ({want} bytes), found {have}",
            _HEADER.size + min(have, want),
        )
    if expected_shape is not None and (rows, cols) != tuple(expected_shape):
        raise CheckpointError(
            f"dimension mismatch: header {rows}x{cols}, expected "
            f"{expected_shape[0]}x{expected_shape[1]}", 8,
        )
    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(rows, cols).astype(np.float64)
