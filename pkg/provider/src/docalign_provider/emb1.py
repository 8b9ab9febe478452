"""EMB1 writer: magic "EMB1", little-endian u32 version (=1), u32 dim,
u64 row count, then float32 rows. Deliberately independent of the engine
package; the file format is the contract."""

import struct

import numpy as np

_HEADER = struct.Struct("<4sIIQ")


def write_emb1(path, rows: np.ndarray) -> None:
    rows = np.ascontiguousarray(rows, dtype=np.float32)
    if rows.ndim != 2:
        raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"EMB1", 1, rows.shape[1], rows.shape[0]))
        fh.write(rows.astype("<f4", copy=False).tobytes())
