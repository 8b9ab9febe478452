"""Alignment quality metrics: strict recall, soft recall (edit-distance
credit for near-duplicate documents), source-side F1, an approximate
randomization significance test, and recall binned by document length."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .assignment import AlignmentSet
from .corpus import DocumentStore
from .errors import MissingDocumentError

DEFAULT_LENGTH_BINS = (0, 256, 1024, 2048)
SAMPLED_TRIALS = 1_048_576
ENUMERATION_LIMIT = 20
_TRIAL_CHUNK = 1 << 17


@dataclass(frozen=True)
class GoldPairs:
    pairs: frozenset[tuple[str, str]]

    def __post_init__(self):
        if not self.pairs:
            raise ValueError("gold pair set is empty")

    @property
    def unique_sources(self) -> int:
        return len({s for s, _ in self.pairs})

    def __len__(self) -> int:
        return len(self.pairs)


def read_gold_tsv(path) -> GoldPairs:
    pairs = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            src_id, tgt_id = line.split("\t")[:2]
            pairs.add((src_id, tgt_id))
    return GoldPairs(pairs=frozenset(pairs))


def recall(pred: AlignmentSet, gold: GoldPairs) -> float:
    return len(pred.as_id_pairs() & gold.pairs) / len(gold)


def levenshtein(s1: str, s2: str) -> int:
    """Character-level edit distance. Rolling-row DP; the in-row insertion
    dependency is resolved with a min-plus prefix scan so each row is a
    handful of vector ops instead of a Python loop."""
    if s1 == s2:
        return 0
    if len(s1) > len(s2):
        s1, s2 = s2, s1
    if not s1:
        return len(s2)
    a = np.frombuffer(s1.encode("utf-32-le"), dtype=np.uint32)
    b = np.frombuffer(s2.encode("utf-32-le"), dtype=np.uint32)
    idx = np.arange(len(a) + 1, dtype=np.int64)
    prev = idx.copy()
    tmp = np.empty_like(prev)
    for ch in b:
        tmp[0] = prev[0] + 1
        np.minimum(prev[:-1] + (a != ch), prev[1:] + 1, out=tmp[1:])
        # cur[i] = min_{k<=i} (tmp[k] + i - k)
        shifted = tmp - idx
        np.minimum.accumulate(shifted, out=shifted)
        prev = shifted + idx
        prev, tmp = prev, np.empty_like(prev)
    return int(prev[-1])


def normalized_levenshtein(s1: str, s2: str) -> float:
    """Edit distance over the longer length; 0.0 for two empty strings."""
    longest = max(len(s1), len(s2))
    if longest == 0:
        return 0.0
    return levenshtein(s1, s2) / longest


def soft_recall(pred: AlignmentSet, gold: GoldPairs,
                src_store: DocumentStore, tgt_store: DocumentStore,
                threshold: float = 0.05) -> float:
    """Credit a gold pair when a predicted pair matches it exactly, or
    matches one side by id while the other side's document text is within
    ``threshold`` normalized edit distance of the gold document's text.
    Pairs fuzzy on both sides earn no credit."""

    def text(store: DocumentStore, doc_id: str) -> str:
        if doc_id not in store:
            raise MissingDocumentError(f"no document text for id {doc_id!r}")
        return store.get(doc_id).text

    pred_pairs = pred.as_id_pairs()
    by_src: dict[str, list[str]] = {}
    by_tgt: dict[str, list[str]] = {}
    for s, t in pred_pairs:
        by_src.setdefault(s, []).append(t)
        by_tgt.setdefault(t, []).append(s)

    credited = 0
    for s_g, t_g in gold.pairs:
        if (s_g, t_g) in pred_pairs:
            credited += 1
            continue
        hit = False
        for t_p in by_src.get(s_g, ()):
            if _near(text(tgt_store, t_p), text(tgt_store, t_g), threshold):
                hit = True
                break
        if not hit:
            for s_p in by_tgt.get(t_g, ()):
                if _near(text(src_store, s_p), text(src_store, s_g), threshold):
                    hit = True
                    break
        credited += hit
    return credited / len(gold)


def _near(text_a: str, text_b: str, threshold: float) -> bool:
    longest = max(len(text_a), len(text_b))
    if longest == 0:
        return True
    # Length difference lower-bounds the edit distance.
    if abs(len(text_a) - len(text_b)) >= threshold * longest:
        return False
    return normalized_levenshtein(text_a, text_b) < threshold


def f1_source_side(pred: AlignmentSet, gold: GoldPairs) -> tuple[float, float, float]:
    """Precision, recall, F1 with recall over the gold set's distinct source
    documents (one instance per source, even when several gold targets
    exist for it) and precision over the predicted pairs."""
    return _prf(pred.as_id_pairs(), gold)


def _prf(pred_pairs: set[tuple[str, str]], gold: GoldPairs) -> tuple[float, float, float]:
    correct = len(pred_pairs & gold.pairs)
    rec = correct / gold.unique_sources
    prec = correct / len(pred_pairs) if pred_pairs else 0.0
    f1 = 2 * prec * rec / (prec + rec) if (prec + rec) > 0 else 0.0
    return prec, rec, f1


def randomization_test(a: AlignmentSet, b: AlignmentSet, gold: GoldPairs,
                       metric: Callable[[set[tuple[str, str]], GoldPairs], float] | None = None,
                       seed: int = 42) -> float:
    """Significance of the score gap between two result sets.

    The symmetric difference of the two pair sets (correctness-agnostic) is
    split into two random parts, each recombined with the intersection, and
    the metric gap recomputed; p = (n + 1) / (trials + 1) where n counts
    trials whose gap exceeds the observed one. Differences of up to 20
    elements are enumerated exhaustively (2^|D| partitions); larger ones are
    sampled with 1,048,576 uniform partitions from a seeded generator.

    ``metric`` defaults to source-side F1 and takes (pair set, gold);
    trial sets are raw pair sets and need not form a matching.
    """
    a_pairs = a.as_id_pairs()
    b_pairs = b.as_id_pairs()
    fast = metric is None
    if fast:
        metric = lambda pairs, g: _prf(pairs, g)[2]
    if metric(a_pairs, gold) < metric(b_pairs, gold):
        a_pairs, b_pairs = b_pairs, a_pairs
    base_delta = metric(a_pairs, gold) - metric(b_pairs, gold)

    common = a_pairs & b_pairs
    diff = sorted(a_pairs ^ b_pairs)
    d = len(diff)

    if d <= ENUMERATION_LIMIT:
        trials = 1 << d
        chunks = _enumerated_chunks(d)
    else:
        trials = SAMPLED_TRIALS
        chunks = _sampled_chunks(d, seed)

    if fast:
        n_exceed = _count_exceeding_fast(chunks, diff, common, gold, base_delta)
    else:
        n_exceed = 0
        for bits in chunks:
            for row in bits:
                part_a = {diff[i] for i in range(d) if row[i]}
                part_b = {diff[i] for i in range(d) if not row[i]}
                delta = metric(common | part_a, gold) - metric(common | part_b, gold)
                n_exceed += delta > base_delta
    return (n_exceed + 1) / (trials + 1)


def _enumerated_chunks(d: int):
    if d == 0:
        yield np.zeros((1, 0), dtype=np.uint8)
        return
    shifts = np.arange(d, dtype=np.uint64)
    for start in range(0, 1 << d, _TRIAL_CHUNK):
        masks = np.arange(start, min(start + _TRIAL_CHUNK, 1 << d), dtype=np.uint64)
        yield ((masks[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _sampled_chunks(d: int, seed: int):
    rng = np.random.default_rng(seed)
    remaining = SAMPLED_TRIALS
    while remaining > 0:
        n = min(_TRIAL_CHUNK, remaining)
        yield rng.integers(0, 2, size=(n, d), dtype=np.uint8)
        remaining -= n


def _count_exceeding_fast(chunks, diff, common, gold: GoldPairs, base_delta: float) -> int:
    """Source-side F1 depends only on (correct, prediction count), so each
    trial reduces to two dot products against the gold-membership vector."""
    common_correct = len(common & gold.pairs)
    common_n = len(common)
    unique_sources = gold.unique_sources
    is_gold = np.array([p in gold.pairs for p in diff], dtype=np.float64)
    d = len(diff)
    n_exceed = 0
    for bits in chunks:
        bits_f = bits.astype(np.float64)
        ones = bits_f.sum(axis=1)
        correct_a = common_correct + bits_f @ is_gold
        correct_b = common_correct + (is_gold.sum() - bits_f @ is_gold)
        n_a = common_n + ones
        n_b = common_n + (d - ones)
        f1_a = _f1_vector(correct_a, n_a, unique_sources)
        f1_b = _f1_vector(correct_b, n_b, unique_sources)
        n_exceed += int(np.sum((f1_a - f1_b) > base_delta))
    return n_exceed


def _f1_vector(correct: np.ndarray, n_pred: np.ndarray, unique_sources: int) -> np.ndarray:
    rec = correct / unique_sources
    prec = np.where(n_pred > 0, correct / np.maximum(n_pred, 1), 0.0)
    denom = prec + rec
    return np.where(denom > 0, 2 * prec * rec / np.where(denom > 0, denom, 1.0), 0.0)


@dataclass(frozen=True)
class LengthBinRecall:
    low: float
    high: float  # inf for the last bin
    gold_pairs: int
    recall: float | None  # None marks an empty bin (n/a, not 0)


def recall_by_length(pred: AlignmentSet, gold: GoldPairs, docs: DocumentStore,
                     bins: Sequence[int] = DEFAULT_LENGTH_BINS,
                     side: str = "src") -> list[LengthBinRecall]:
    """Bucket gold pairs by the designated side's document token count
    (whitespace tokens) and compute recall per bucket. ``bins`` gives the
    lower edges; the last bucket is open-ended."""
    if side not in ("src", "tgt"):
        raise ValueError(f"side must be 'src' or 'tgt', got {side!r}")
    edges = [float(x) for x in bins] + [float("inf")]
    pred_pairs = pred.as_id_pairs()
    hits = [0] * len(bins)
    totals = [0] * len(bins)
    for pair in gold.pairs:
        doc_id = pair[0] if side == "src" else pair[1]
        if doc_id not in docs:
            raise MissingDocumentError(f"no document text for id {doc_id!r}")
        n_tokens = len(docs.get(doc_id).text.split())
        for k in range(len(bins)):
            if edges[k] <= n_tokens < edges[k + 1]:
                totals[k] += 1
                hits[k] += pair in pred_pairs
                break
    return [
        LengthBinRecall(low=edges[k], high=edges[k + 1], gold_pairs=totals[k],
                        recall=(hits[k] / totals[k]) if totals[k] else None)
        for k in range(len(bins))
    ]


def weighted_average(values: Sequence[float], weights: Sequence[float]) -> float:
    """Gold-pair-count weighted mean, for aggregating per-domain recalls."""
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.sum() <= 0:
        raise ValueError("weights must sum to a positive value")
    return float((values * weights).sum() / weights.sum())


@dataclass
class EvalReport:
    """Headline metrics plus optional extras. ``recall`` and ``precision``
    are the pair that ``f1`` is the harmonic mean of (source-side);
    ``strict_recall`` divides by the total gold pair count instead."""

    recall: float
    precision: float
    f1: float
    strict_recall: float | None = None
    soft_recall: float | None = None
    by_length: list[LengthBinRecall] = field(default_factory=list)
    p_value: float | None = None

    def __post_init__(self):
        if self.precision + self.recall > 0:
            expected = 2 * self.precision * self.recall / (self.precision + self.recall)
        else:
            expected = 0.0
        if abs(expected - self.f1) > 1e-9:
            raise ValueError("f1 is not the harmonic mean of precision and recall")

    def to_json(self) -> str:
        payload: dict = {
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
        }
        if self.strict_recall is not None:
            payload["strict_recall"] = self.strict_recall
        if self.soft_recall is not None:
            payload["soft_recall"] = self.soft_recall
        if self.by_length:
            payload["recall_by_length"] = [
                {
                    "low": b.low,
                    "high": "inf" if b.high == float("inf") else b.high,
                    "gold_pairs": b.gold_pairs,
                    "recall": b.recall,
                }
                for b in self.by_length
            ]
        if self.p_value is not None:
            payload["p_value"] = self.p_value
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_text(self) -> str:
        rows = [
            ("recall", f"{self.recall:.4f}"),
            ("precision", f"{self.precision:.4f}"),
            ("f1", f"{self.f1:.4f}"),
        ]
        if self.strict_recall is not None:
            rows.append(("strict_recall", f"{self.strict_recall:.4f}"))
        if self.soft_recall is not None:
            rows.append(("soft_recall", f"{self.soft_recall:.4f}"))
        for b in self.by_length:
            hi = "inf" if b.high == float("inf") else str(int(b.high))
            label = f"recall[{int(b.low)},{hi})"
            rows.append((label, "n/a" if b.recall is None else f"{b.recall:.4f}"))
        if self.p_value is not None:
            rows.append(("p_value", f"{self.p_value:.6f}"))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)
