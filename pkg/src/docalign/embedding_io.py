"""EMB1 binary embedding files and the in-memory embedding store.

Layout (little-endian): magic ``EMB1``, u32 version (=1), u32 dim,
u64 row count, then count*dim float32 values row-major. Rows are
re-normalized to unit L2 at load time so inner-product search equals
cosine search; the provider is not trusted to normalize.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DataError, FormatError
from .segmentation import read_segment_index

MAGIC = b"EMB1"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")

# Rows already unit to this tolerance pass through untouched, keeping
# write(read(f)) byte-identical for pre-normalized files.
_NORM_SKIP_TOL = 1e-6
_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class EmbeddingStore:
    """Unit-normalized segment embeddings for one corpus side, with
    per-document row ranges. Immutable; share across threads freely."""

    side: str
    dim: int
    rows: np.ndarray  # (count, dim) float32, unit rows
    ranges: dict[str, tuple[int, int]]  # doc_id -> (start_row, n_rows)
    doc_order: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != self.dim:
            raise ValueError(f"rows must be (count, {self.dim}), got {self.rows.shape}")
        expected = 0
        order = self.doc_order or tuple(self.ranges)
        for doc_id in order:
            start, n = self.ranges[doc_id]
            if start != expected or n < 1:
                raise ConsistencyError(
                    f"ranges do not tile rows: doc {doc_id!r} starts at {start}, expected {expected}")
            expected = start + n
        if expected != len(self.rows):
            raise ConsistencyError(
                f"ranges cover {expected} rows but file has {len(self.rows)}")
        if not self.doc_order:
            object.__setattr__(self, "doc_order", order)

    @property
    def count(self) -> int:
        return len(self.rows)

    def doc_rows(self, doc_id: str) -> np.ndarray:
        start, n = self.ranges[doc_id]
        return self.rows[start:start + n]


def normalize_rows(rows: np.ndarray, context: str = "embedding") -> np.ndarray:
    """Unit-normalize rows in float64, rejecting zero rows. Rows already
    unit within tolerance are returned bit-identical."""
    rows = np.ascontiguousarray(rows, dtype=np.float32)
    norms = np.linalg.norm(rows.astype(np.float64), axis=1)
    zero = np.flatnonzero(norms < _ZERO_TOL)
    if zero.size:
        raise DataError(f"{context}: zero-norm row at index {int(zero[0])}")
    off = np.abs(norms - 1.0) > _NORM_SKIP_TOL
    if np.any(off):
        rows = rows.copy()
        rows[off] = (rows[off].astype(np.float64) / norms[off, None]).astype(np.float32)
    return rows


def write_emb1(path, rows: np.ndarray) -> None:
    rows = np.ascontiguousarray(rows, dtype=np.float32)
    if rows.ndim != 2:
        raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, rows.shape[1], rows.shape[0]))
        fh.write(rows.astype("<f4", copy=False).tobytes())


def read_emb1_rows(path) -> np.ndarray:
    """Parse an EMB1 file without normalization or index cross-checks."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        payload = fh.read()
    expected = count * dim * 4
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, header promises {expected}")
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    return np.ascontiguousarray(rows)


def read_emb1(emb_path, index_path, side: str = "source") -> EmbeddingStore:
    """Load an EMB1 file, normalize rows, and cross-check the per-document
    ranges against the segmentation sidecar index."""
    rows = read_emb1_rows(emb_path)
    if len(rows) == 0:
        raise ConsistencyError(f"empty embedding file: {emb_path}")
    index = read_segment_index(index_path)
    total = sum(entry["n_segments"] for entry in index)
    if total != len(rows):
        raise ConsistencyError(
            f"{emb_path}: {len(rows)} rows but index {index_path} lists {total} segments")
    ranges: dict[str, tuple[int, int]] = {}
    order: list[str] = []
    for entry in index:
        doc_id = entry["doc_id"]
        if doc_id in ranges:
            raise ConsistencyError(f"{index_path}: duplicate doc_id {doc_id!r}")
        ranges[doc_id] = (entry["start_line"], entry["n_segments"])
        order.append(doc_id)
    rows = normalize_rows(rows, context=str(emb_path))
    return EmbeddingStore(side=side, dim=rows.shape[1], rows=rows,
                          ranges=ranges, doc_order=tuple(order))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Dot product of two unit vectors, accumulated in float64."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u.astype(np.float64), v.astype(np.float64)))
