"""Document feature vectors for candidate generation.

Mean-Pool is the normalized mean of a document's segment embeddings.
The window-pooled alternative spreads J position-emphasized windows over
the segment axis using a Beta-shaped density (mode (j+0.5)/J, peakedness
gamma), down-weights boilerplate segments by linear inverse document
frequency (1/df), normalizes each window vector, and concatenates them
into a J*d feature vector.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .embedding_io import EmbeddingStore
from .errors import DegenerateDocumentError, MissingDocumentError
from .segmentation import SegmentedDocument

logger = logging.getLogger(__name__)

_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class PertSpec:
    """Window count J and peakedness gamma of the window density."""

    windows: int = 8
    gamma: float = 16.0

    def __post_init__(self):
        if self.windows < 1:
            raise ValueError(f"windows must be >= 1, got {self.windows}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")


@dataclass
class DocVectorSet:
    """One feature vector per document, unit rows, corpus order."""

    side: str
    ids: tuple[str, ...]
    matrix: np.ndarray  # (n_docs, d) float32

    def __post_init__(self):
        if len(self.ids) != len(self.matrix):
            raise ValueError("ids and matrix row count differ")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.ids)


def mean_pool(rows: np.ndarray) -> np.ndarray:
    """Arithmetic mean of segment rows, L2-normalized. Exactly cancelling
    rows leave nothing to point at, which is an error, not a zero vector."""
    if len(rows) == 0:
        raise ValueError("mean_pool needs at least one row")
    mean = rows.astype(np.float64).mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm < _ZERO_TOL:
        raise DegenerateDocumentError("segment vectors cancel to a zero mean")
    return (mean / norm).astype(np.float32)


def pert_weights(spec: PertSpec, n_segments: int) -> np.ndarray:
    """J x N window weights. Window j has mode (j+0.5)/J on [0,1]; the
    density x^(alpha-1) * (1-x)^(beta-1) with alpha = 1 + gamma*mode and
    beta = 1 + gamma*(1-mode) is evaluated at segment centers (i+0.5)/N
    and each row normalized to sum 1. Computed in log space so large gamma
    or N cannot underflow a whole row."""
    if n_segments < 1:
        raise ValueError(f"n_segments must be >= 1, got {n_segments}")
    j = np.arange(spec.windows, dtype=np.float64)
    modes = (j + 0.5) / spec.windows
    alpha = 1.0 + spec.gamma * modes
    beta = 1.0 + spec.gamma * (1.0 - modes)
    x = (np.arange(n_segments, dtype=np.float64) + 0.5) / n_segments
    log_w = (alpha - 1.0)[:, None] * np.log(x)[None, :] \
        + (beta - 1.0)[:, None] * np.log1p(-x)[None, :]
    log_w -= log_w.max(axis=1, keepdims=True)
    w = np.exp(log_w)
    return w / w.sum(axis=1, keepdims=True)


def build_lidf(segdocs: Sequence[SegmentedDocument]) -> dict[str, float]:
    """Linear inverse document frequency per exact segment text: weight
    1/df where df counts documents containing the text (once per doc)."""
    df: Counter[str] = Counter()
    for segdoc in segdocs:
        df.update(set(segdoc.texts))
    return {text: 1.0 / count for text, count in df.items()}


def tk_pert(rows: np.ndarray, weights: np.ndarray, lidf: np.ndarray) -> np.ndarray:
    """Window-pooled document vector: v_j = sum_i weights[j,i] * lidf[i] *
    rows[i], each v_j unit-normalized (zero windows stay zero), concatenated
    and normalized as a whole."""
    if weights.shape[1] != len(rows) or len(lidf) != len(rows):
        raise ValueError(
            f"shape mismatch: {len(rows)} rows, weights {weights.shape}, lidf {len(lidf)}")
    scaled = rows.astype(np.float64) * (weights[:, :, None] * lidf[None, :, None])
    windows = scaled.sum(axis=1)  # (J, d)
    norms = np.linalg.norm(windows, axis=1)
    live = norms > _ZERO_TOL
    if not live.any():
        raise DegenerateDocumentError("all window vectors are zero")
    windows[live] /= norms[live, None]
    windows[~live] = 0.0
    flat = windows.reshape(-1)
    return (flat / np.linalg.norm(flat)).astype(np.float32)


class DocVectorizer(TransformerMixin, BaseEstimator):
    """Build one feature vector per document from its segment embeddings.

    ``method`` is "mean" or "tkpert". For "tkpert", ``fit`` learns the
    corpus-side LIDF table from the segmented documents; ``transform`` then
    pools each document's rows. Degenerate documents (all-zero pooling) are
    excluded from the output and reported on ``degenerate_ids_``.
    """

    def __init__(self, method="mean", windows=8, gamma=16.0):
        self.method = method
        self.windows = windows
        self.gamma = gamma

    def fit(self, X: Sequence[SegmentedDocument], y=None):
        if self.method not in ("mean", "tkpert"):
            raise ValueError(f"method must be 'mean' or 'tkpert', got {self.method!r}")
        if self.method == "tkpert":
            self.lidf_ = build_lidf(X)
        else:
            self.lidf_ = None
        return self

    def transform(self, X: Sequence[SegmentedDocument], store: EmbeddingStore = None) -> DocVectorSet:
        if store is None:
            raise ValueError("transform needs the side's EmbeddingStore")
        if not hasattr(self, "lidf_"):
            raise RuntimeError("DocVectorizer is not fitted; call fit first")
        spec = PertSpec(self.windows, self.gamma)
        ids: list[str] = []
        vecs: list[np.ndarray] = []
        degenerate: list[str] = []
        for segdoc in X:
            if segdoc.doc_id not in store.ranges:
                raise MissingDocumentError(f"no embedding rows for document {segdoc.doc_id!r}")
            rows = store.doc_rows(segdoc.doc_id)
            if len(rows) != len(segdoc):
                raise MissingDocumentError(
                    f"document {segdoc.doc_id!r}: {len(rows)} rows vs {len(segdoc)} segments")
            try:
                if self.method == "mean":
                    vec = mean_pool(rows)
                else:
                    weights = pert_weights(spec, len(segdoc))
                    lidf = np.array([self.lidf_.get(t, 1.0) for t in segdoc.texts])
                    vec = tk_pert(rows, weights, lidf)
            except DegenerateDocumentError:
                degenerate.append(segdoc.doc_id)
                continue
            ids.append(segdoc.doc_id)
            vecs.append(vec)
        if degenerate:
            logger.warning("%d degenerate document(s) excluded: %s",
                           len(degenerate), ", ".join(degenerate[:10]))
        self.degenerate_ids_ = degenerate
        matrix = np.vstack(vecs) if vecs else np.empty((0, 0), dtype=np.float32)
        return DocVectorSet(side=store.side, ids=tuple(ids), matrix=matrix)
