"""Greedy 1-1 filtering of scored pairs (competitive linking): rank by
score and keep a pair only while both of its document ids are unseen.
Ties break on source id then target id so runs are byte-reproducible."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .scoring import ScoredPair


@dataclass(frozen=True)
class AlignmentSet:
    """A matching: every src_id and every tgt_id appears at most once."""

    pairs: tuple[tuple[str, str, float], ...]

    def __post_init__(self):
        srcs = [p[0] for p in self.pairs]
        tgts = [p[1] for p in self.pairs]
        if len(set(srcs)) != len(srcs) or len(set(tgts)) != len(tgts):
            raise ValueError("alignment set is not a matching")

    def __len__(self) -> int:
        return len(self.pairs)

    def as_id_pairs(self) -> set[tuple[str, str]]:
        return {(s, t) for s, t, _ in self.pairs}


def one_to_one(scored: Sequence[ScoredPair]) -> AlignmentSet:
    for sp in scored:
        if not math.isfinite(sp.score):
            raise ValueError(f"non-finite score for pair ({sp.src_id}, {sp.tgt_id})")
    ranked = sorted(scored, key=lambda sp: (-sp.score, sp.src_id, sp.tgt_id))
    used_src: set[str] = set()
    used_tgt: set[str] = set()
    accepted: list[tuple[str, str, float]] = []
    for sp in ranked:
        if sp.src_id in used_src or sp.tgt_id in used_tgt:
            continue
        used_src.add(sp.src_id)
        used_tgt.add(sp.tgt_id)
        accepted.append((sp.src_id, sp.tgt_id, sp.score))
    return AlignmentSet(pairs=tuple(accepted))


def write_alignment(alignment: AlignmentSet, path) -> None:
    """Alignment TSV: src_id, tgt_id, score."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for src_id, tgt_id, score in alignment.pairs:
            fh.write(f"{src_id}\t{tgt_id}\t{score:.6f}\n")


def read_alignment(path) -> AlignmentSet:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            src_id, tgt_id, score = line.split("\t")
            pairs.append((src_id, tgt_id, float(score)))
    return AlignmentSet(pairs=tuple(pairs))
