"""Stage-2 re-ranking scores over candidate pairs.

Three scorers, all oriented higher-is-better:

* the bidirectional max-similarity score: one similarity matrix, two
  max-reductions, averaged over both directions;
* entropic-regularized optimal transport between segment weight
  distributions (cost 1 - cosine), reported as 1 - transport cost;
* a greedy mover variant that transports mass over cost-sorted segment
  pairs, also reported as 1 - cost.

Similarity matrices are computed and accumulated in float64.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import logsumexp

from .embedding_io import EmbeddingStore
from .errors import MissingDocumentError
from .retrieval import CandidateList
from .segmentation import SegmentedDocument

WEIGHT_SCHEMES = ("uniform", "sf", "sl")
RERANK_METHODS = ("bimax", "ot", "gmd")


@dataclass(frozen=True)
class ScoredPair:
    src_id: str
    tgt_id: str
    score: float
    method: str


@dataclass(frozen=True)
class ThroughputReport:
    """Wall time covers the whole re-ranking call; pair_sec_total sums the
    per-pair scoring times, which differs under parallel execution."""

    method: str
    pairs: int
    wall_sec: float
    pairs_per_sec: float
    pair_sec_total: float

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "pairs": self.pairs,
            "wall_sec": self.wall_sec,
            "pairs_per_sec": self.pairs_per_sec,
            "pair_sec_total": self.pair_sec_total,
        }


def _sim_matrix(s_rows: np.ndarray, t_rows: np.ndarray) -> np.ndarray:
    if len(s_rows) == 0 or len(t_rows) == 0:
        raise ValueError("cannot score an empty segment side")
    if s_rows.shape[1] != t_rows.shape[1]:
        raise ValueError(
            f"dimensionality mismatch: {s_rows.shape[1]} vs {t_rows.shape[1]}")
    sim = s_rows.astype(np.float64) @ t_rows.astype(np.float64).T
    # float32 unit rows can push a self-similarity a few ulp past 1, which
    # would make the 1 - sim transport cost negative; cosines of unit
    # vectors live in [-1, 1], so pin the dust back in
    return np.clip(sim, -1.0, 1.0, out=sim)


def maxsim(s_rows: np.ndarray, t_rows: np.ndarray) -> float:
    """Mean over source segments of the best cosine against any target segment."""
    return float(_sim_matrix(s_rows, t_rows).max(axis=1).mean())


def bimax(s_rows: np.ndarray, t_rows: np.ndarray) -> float:
    """Symmetrized max-similarity: one matrix, max-pool along both axes."""
    sim = _sim_matrix(s_rows, t_rows)
    return 0.5 * (float(sim.max(axis=1).mean()) + float(sim.max(axis=0).mean()))


class SegmentWeights(NamedTuple):
    """A probability vector over atoms plus the embedding row (relative to
    the document's rows) each atom uses. Duplicate segment texts merge into
    a single atom under segment-frequency weighting, anchored to the first
    occurrence's row."""

    weights: np.ndarray
    row_indices: np.ndarray


def seg_weights(doc: SegmentedDocument, scheme: str) -> SegmentWeights:
    if scheme not in WEIGHT_SCHEMES:
        raise ValueError(f"scheme must be one of {WEIGHT_SCHEMES}, got {scheme!r}")
    n = len(doc)
    if n == 0:
        raise ValueError(f"document {doc.doc_id!r} has no segments")
    if scheme == "uniform":
        w = np.full(n, 1.0 / n)
        idx = np.arange(n)
    elif scheme == "sl":
        lens = np.array(doc.token_lens, dtype=np.float64)
        w = lens / lens.sum()
        idx = np.arange(n)
    else:  # sf: merge duplicate texts into atoms
        first: dict[str, int] = {}
        counts: dict[str, int] = {}
        for i, text in enumerate(doc.texts):
            if text not in first:
                first[text] = i
                counts[text] = 0
            counts[text] += 1
        idx = np.array(list(first.values()))
        w = np.array([counts[t] for t in first], dtype=np.float64)
        w /= w.sum()
    return SegmentWeights(weights=w, row_indices=idx)


@dataclass(frozen=True)
class SinkhornResult:
    cost: float
    plan: np.ndarray
    converged: bool
    n_iter: int


def sinkhorn_cost(C: np.ndarray, a: np.ndarray, b: np.ndarray,
                  eps: float = 0.05, max_iter: int = 200,
                  tol: float = 1e-6) -> SinkhornResult:
    """Entropic-regularized transport cost via log-domain alternating
    scaling. Stops when both marginals of the implied plan are within
    ``tol`` (max abs violation) or after ``max_iter`` sweeps; the result
    carries a non-convergence flag rather than raising."""
    C = np.asarray(C, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (np.all(np.isfinite(C)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite entries in cost matrix or marginals")
    if C.shape != (len(a), len(b)):
        raise ValueError(f"cost matrix {C.shape} vs marginals ({len(a)}, {len(b)})")
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")

    log_a = np.log(a)
    log_b = np.log(b)
    neg_c = -C / eps
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        f = eps * (log_a - logsumexp(neg_c + g[None, :] / eps, axis=1))
        g = eps * (log_b - logsumexp(neg_c + f[:, None] / eps, axis=0))
        log_plan = neg_c + (f[:, None] + g[None, :]) / eps
        row = np.exp(logsumexp(log_plan, axis=1))
        col = np.exp(logsumexp(log_plan, axis=0))
        if max(np.abs(row - a).max(), np.abs(col - b).max()) < tol:
            converged = True
            break
    plan = np.exp(neg_c + (f[:, None] + g[None, :]) / eps)
    return SinkhornResult(cost=float((plan * C).sum()), plan=plan,
                          converged=converged, n_iter=it)


def _atom_rows(doc: SegmentedDocument, store: EmbeddingStore, scheme: str):
    if doc.doc_id not in store.ranges:
        raise MissingDocumentError(f"no embedding rows for document {doc.doc_id!r}")
    rows = store.doc_rows(doc.doc_id)
    if len(rows) != len(doc):
        raise MissingDocumentError(
            f"document {doc.doc_id!r}: {len(rows)} rows vs {len(doc)} segments")
    w = seg_weights(doc, scheme)
    return rows[w.row_indices], w.weights


def ot_score(s_doc: SegmentedDocument, t_doc: SegmentedDocument,
             s_store: EmbeddingStore, t_store: EmbeddingStore,
             scheme: str = "sf", eps: float = 0.05, max_iter: int = 200,
             tol: float = 1e-6) -> float:
    """1 - entropic transport cost between the two documents' segment
    distributions with cost 1 - cosine."""
    s_rows, a = _atom_rows(s_doc, s_store, scheme)
    t_rows, b = _atom_rows(t_doc, t_store, scheme)
    C = 1.0 - _sim_matrix(s_rows, t_rows)
    result = sinkhorn_cost(C, a, b, eps=eps, max_iter=max_iter, tol=tol)
    return 1.0 - result.cost


def gmd_cost(C: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Greedy transport: visit segment pairs by cost ascending (ties by
    source then target index) and move as much remaining mass as possible."""
    n, m = C.shape
    flat = C.reshape(-1)
    order = np.argsort(flat, kind="stable")  # row-major flattening encodes the tie rule
    a_rem = a.astype(np.float64).copy()
    b_rem = b.astype(np.float64).copy()
    total = 0.0
    moved = 0.0
    target = min(a_rem.sum(), b_rem.sum())
    for pos in order:
        i, j = divmod(int(pos), m)
        m_ij = min(a_rem[i], b_rem[j])
        if m_ij <= 0.0:
            continue
        a_rem[i] -= m_ij
        b_rem[j] -= m_ij
        total += m_ij * flat[pos]
        moved += m_ij
        if moved >= target - 1e-15:
            break
    return total


def gmd_score(s_doc: SegmentedDocument, t_doc: SegmentedDocument,
              s_store: EmbeddingStore, t_store: EmbeddingStore,
              scheme: str = "sl") -> float:
    s_rows, a = _atom_rows(s_doc, s_store, scheme)
    t_rows, b = _atom_rows(t_doc, t_store, scheme)
    C = 1.0 - _sim_matrix(s_rows, t_rows)
    return 1.0 - gmd_cost(C, a, b)


def rerank(candidates: Sequence[CandidateList], method: str,
           s_docs: dict[str, SegmentedDocument], t_docs: dict[str, SegmentedDocument],
           s_store: EmbeddingStore, t_store: EmbeddingStore,
           scheme: str | None = None, eps: float = 0.05, max_iter: int = 200,
           tol: float = 1e-6, threads: int = 1) -> tuple[list[ScoredPair], ThroughputReport]:
    """Score every (source, candidate) pair with the chosen method.

    Pairs are independent; with ``threads > 1`` they are scored by a thread
    pool with no shared mutable state. Each pair is still computed
    single-threaded, so pairs/sec comparisons stay fair across methods.
    """
    if method not in RERANK_METHODS:
        raise ValueError(f"method must be one of {RERANK_METHODS}, got {method!r}")
    if scheme is None:
        scheme = "sf" if method == "ot" else "sl"

    pairs = [(cl.src_id, tgt_id) for cl in candidates for tgt_id, _ in cl.candidates]

    def doc_of(doc_id: str, docs: dict[str, SegmentedDocument]) -> SegmentedDocument:
        if doc_id not in docs:
            raise MissingDocumentError(f"no segmentation for document {doc_id!r}")
        return docs[doc_id]

    def score_one(pair: tuple[str, str]) -> tuple[ScoredPair, float]:
        src_id, tgt_id = pair
        t0 = time.perf_counter()
        if method == "bimax":
            s = bimax(s_store.doc_rows(_check_range(src_id, s_store)),
                      t_store.doc_rows(_check_range(tgt_id, t_store)))
        elif method == "ot":
            s = ot_score(doc_of(src_id, s_docs), doc_of(tgt_id, t_docs),
                         s_store, t_store, scheme=scheme, eps=eps,
                         max_iter=max_iter, tol=tol)
        else:
            s = gmd_score(doc_of(src_id, s_docs), doc_of(tgt_id, t_docs),
                          s_store, t_store, scheme=scheme)
        dt = time.perf_counter() - t0
        return ScoredPair(src_id=src_id, tgt_id=tgt_id, score=s, method=method), dt

    wall_start = time.perf_counter()
    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(score_one, pairs))
    else:
        results = [score_one(p) for p in pairs]
    wall = time.perf_counter() - wall_start

    scored = [r[0] for r in results]
    pair_total = sum(r[1] for r in results)
    report = ThroughputReport(
        method=method, pairs=len(pairs), wall_sec=wall,
        pairs_per_sec=len(pairs) / wall if wall > 0 else float("inf"),
        pair_sec_total=pair_total,
    )
    return scored, report


def _check_range(doc_id: str, store: EmbeddingStore) -> str:
    if doc_id not in store.ranges:
        raise MissingDocumentError(f"no embedding rows for document {doc_id!r}")
    return doc_id


def write_scored_pairs(scored: Sequence[ScoredPair], path) -> None:
    """Scored-pairs TSV: src_id, tgt_id, method, score."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sp in scored:
            fh.write(f"{sp.src_id}\t{sp.tgt_id}\t{sp.method}\t{sp.score:.6f}\n")


def read_scored_pairs(path) -> list[ScoredPair]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            src_id, tgt_id, method, score = line.split("\t")
            out.append(ScoredPair(src_id=src_id, tgt_id=tgt_id,
                                  score=float(score), method=method))
    return out
