"""Stage-1 candidate generation: exact top-K inner-product search of source
document vectors against target document vectors.

Brute force over blocks of sources keeps the score matrix bounded while
staying exact; an approximate backend can slot in behind the same contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .docvec import DocVectorSet


@dataclass(frozen=True)
class CandidateList:
    """Top candidates for one source document, scores descending, ties
    broken by target id ascending, no duplicate targets."""

    src_id: str
    candidates: tuple[tuple[str, float], ...]


def topk(src: DocVectorSet, tgt: DocVectorSet, k: int,
         block_size: int = 1024) -> list[CandidateList]:
    """For each source vector, the K largest inner products over all target
    vectors, exact. K larger than the target count returns every target."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(tgt) == 0:
        raise ValueError("target set is empty")
    if src.dim != tgt.dim:
        raise ValueError(f"dimensionality mismatch: source {src.dim}, target {tgt.dim}")

    tgt_matrix = tgt.matrix.astype(np.float64).T  # (d, T)
    # Rank of each target position under id-ascending order, for ties.
    id_rank = np.empty(len(tgt), dtype=np.int64)
    id_rank[np.argsort(np.asarray(tgt.ids, dtype=object), kind="stable")] = np.arange(len(tgt))
    k_eff = min(k, len(tgt))

    out: list[CandidateList] = []
    for start in range(0, len(src), block_size):
        block = src.matrix[start:start + block_size].astype(np.float64)
        scores = block @ tgt_matrix  # (B, T)
        for row, src_id in zip(scores, src.ids[start:start + block_size]):
            order = np.lexsort((id_rank, -row))[:k_eff]
            out.append(CandidateList(
                src_id=src_id,
                candidates=tuple((tgt.ids[j], float(row[j])) for j in order),
            ))
    return out


class TopKRetriever(BaseEstimator):
    """Exact nearest-neighbor retriever over unit document vectors.

    ``fit`` indexes the target side; ``query`` returns a CandidateList per
    source document.
    """

    def __init__(self, k=20, block_size=1024):
        self.k = k
        self.block_size = block_size

    def fit(self, target: DocVectorSet, y=None):
        self.target_ = target
        return self

    def query(self, source: DocVectorSet) -> list[CandidateList]:
        if not hasattr(self, "target_"):
            raise RuntimeError("TopKRetriever is not fitted; call fit first")
        return topk(source, self.target_, self.k, self.block_size)


def write_candidates(candidates: Sequence[CandidateList], path) -> None:
    """Candidates TSV: src_id, tgt_id, rank, score (6 decimals)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for cl in candidates:
            for rank, (tgt_id, score) in enumerate(cl.candidates, start=1):
                fh.write(f"{cl.src_id}\t{tgt_id}\t{rank}\t{score:.6f}\n")


def read_candidates(path) -> list[CandidateList]:
    by_src: dict[str, list[tuple[str, float]]] = {}
    order: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            src_id, tgt_id, _rank, score = line.split("\t")
            if src_id not in by_src:
                by_src[src_id] = []
                order.append(src_id)
            by_src[src_id].append((tgt_id, float(score)))
    return [CandidateList(src_id=s, candidates=tuple(by_src[s])) for s in order]
