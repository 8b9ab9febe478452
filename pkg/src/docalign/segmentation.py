"""Segmentation strategies: sentence-based (SBS), fixed-length sliding
windows with overlap (OFLS), and greedy sentence bundles (Blob) with three
optional boundary-overlap variants (token, sentence, token-limited).

All functions are pure; documents can be segmented in parallel.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, replace
from typing import Protocol, Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import Document
from .errors import UnsegmentableDocumentError

# Split after sentence-final punctuation only when whitespace follows;
# end-of-line closes a sentence implicitly.
_SENT_BREAK = re.compile(r"(?<=[.!?。！？])\s+")

BLOB_OVERLAP_MODES = ("tok", "sent", "tok_lim")


class Tokenizer(Protocol):
    """Token stream provider. ``join(tokenize(t))`` must tokenize back to
    the same token list (stability under round-trip)."""

    name: str

    def tokenize(self, text: str) -> list[str]: ...

    def join(self, tokens: Sequence[str]) -> str: ...


class WhitespaceTokenizer:
    """Default tokenizer: split on Unicode whitespace, join with a space."""

    name = "whitespace"

    def tokenize(self, text: str) -> list[str]:
        return text.split()

    def join(self, tokens: Sequence[str]) -> str:
        return " ".join(tokens)


@dataclass(frozen=True)
class Segment:
    """One embedding unit. ``sentences`` is populated only for blobs, where
    the constituent sentences are needed by the overlap variants."""

    text: str
    token_len: int
    position: int
    sentences: tuple["Segment", ...] | None = None

    def __post_init__(self):
        if self.token_len < 1:
            raise ValueError(f"segment at position {self.position} has token_len < 1")


@dataclass(frozen=True)
class SegmentedDocument:
    doc_id: str
    segments: tuple[Segment, ...]

    def __post_init__(self):
        for i, seg in enumerate(self.segments):
            if seg.position != i:
                raise ValueError(f"segment positions of {self.doc_id!r} are not 0..N-1")

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.segments]

    @property
    def token_lens(self) -> list[int]:
        return [s.token_len for s in self.segments]


def _sentences(text: str) -> list[str]:
    out = []
    for line in text.split("\n"):
        for piece in _SENT_BREAK.split(line):
            piece = piece.strip()
            if piece:
                out.append(piece)
    return out


def segment_sbs(doc: Document, tok: Tokenizer) -> SegmentedDocument:
    """One segment per sentence: split on line breaks, then on sentence-final
    punctuation (., !, ?, and their fullwidth forms) followed by whitespace."""
    sentences = _sentences(doc.text)
    if not sentences:
        raise UnsegmentableDocumentError(f"unsegmentable document: {doc.doc_id!r}")
    segments = tuple(
        Segment(text=s, token_len=len(tok.tokenize(s)), position=i)
        for i, s in enumerate(sentences)
    )
    return SegmentedDocument(doc_id=doc.doc_id, segments=segments)


def segment_ofls(doc: Document, tok: Tokenizer, fl: int, or_rate: float) -> SegmentedDocument:
    """Fixed-length window of ``fl`` tokens sliding by
    ``stride = max(1, floor(fl * (1 - or_rate)))``; emission stops as soon as
    a window's end reaches the last token, so no fully-redundant trailing
    window appears."""
    if fl < 2:
        raise ValueError(f"fl must be >= 2, got {fl}")
    if not 0.0 <= or_rate < 1.0:
        raise ValueError(f"or_rate must be in [0, 1), got {or_rate}")
    tokens = tok.tokenize(doc.text)
    n = len(tokens)
    if n == 0:
        raise UnsegmentableDocumentError(f"unsegmentable document: {doc.doc_id!r}")
    stride = max(1, math.floor(fl * (1.0 - or_rate)))
    segments = []
    k = 0
    while True:
        start = k * stride
        end = min(start + fl, n)
        window = tokens[start:end]
        segments.append(Segment(text=tok.join(window), token_len=len(window), position=k))
        if end >= n:
            break
        k += 1
    return SegmentedDocument(doc_id=doc.doc_id, segments=tuple(segments))


def segment_blob(doc: Document, tok: Tokenizer, max_tokens: int) -> SegmentedDocument:
    """Greedily bundle consecutive sentences while the running token total
    stays within ``max_tokens``. An oversize single sentence becomes its own
    blob. Sentence boundaries are retained for the overlap variants."""
    if max_tokens < 1:
        raise ValueError(f"max_tokens must be >= 1, got {max_tokens}")
    sbs = segment_sbs(doc, tok)
    blobs: list[list[Segment]] = []
    current: list[Segment] = []
    current_len = 0
    for sent in sbs.segments:
        if current and current_len + sent.token_len > max_tokens:
            blobs.append(current)
            current = []
            current_len = 0
        current.append(sent)
        current_len += sent.token_len
    if current:
        blobs.append(current)
    segments = tuple(_make_blob(group, pos, tok) for pos, group in enumerate(blobs))
    return SegmentedDocument(doc_id=doc.doc_id, segments=segments)


def _make_blob(sentences: Sequence[Segment], position: int, tok: Tokenizer) -> Segment:
    text = tok.join([s.text for s in sentences])
    return Segment(
        text=text,
        token_len=sum(s.token_len for s in sentences),
        position=position,
        sentences=tuple(replace(s, position=i, sentences=None) for i, s in enumerate(sentences)),
    )


def apply_blob_overlap(blobs: SegmentedDocument, mode: str, tok: Tokenizer,
                       r: float | None = None, n: int | None = None) -> SegmentedDocument:
    """Copy material across each adjacent blob boundary, both directions,
    always measured on the pre-overlap blobs.

    tok(r)      raw token runs: last floor(len(A)*r) tokens of A to the front
                of B, first floor(len(B)*r) tokens of B to the end of A.
    sent(n)     whole sentences, n of them each way.
    tok_lim(r)  whole sentences from the boundary while the copied token
                total stays <= floor(len*r).
    """
    if mode not in BLOB_OVERLAP_MODES:
        raise ValueError(f"mode must be one of {BLOB_OVERLAP_MODES}, got {mode!r}")
    if mode in ("tok", "tok_lim"):
        if r is None or not 0.0 <= r < 1.0:
            raise ValueError(f"{mode} overlap needs r in [0, 1), got {r}")
    if mode == "sent":
        if n is None or n < 0:
            raise ValueError(f"sent overlap needs n >= 0, got {n}")

    old = blobs.segments
    if len(old) <= 1:
        return blobs

    if mode == "sent" and n == 0:
        return blobs

    prefixes: list[list[str]] = [[] for _ in old]  # token runs prepended to blob i
    suffixes: list[list[str]] = [[] for _ in old]
    for i in range(len(old) - 1):
        a, b = old[i], old[i + 1]
        if mode == "tok":
            a_toks = tok.tokenize(a.text)
            b_toks = tok.tokenize(b.text)
            take_a = math.floor(len(a_toks) * r)
            take_b = math.floor(len(b_toks) * r)
            prefixes[i + 1] = a_toks[len(a_toks) - take_a:] if take_a else []
            suffixes[i] = b_toks[:take_b]
        elif mode == "sent":
            a_sents = a.sentences or ()
            b_sents = b.sentences or ()
            prefixes[i + 1] = _sentence_tokens(a_sents[max(0, len(a_sents) - n):], tok)
            suffixes[i] = _sentence_tokens(b_sents[:n], tok)
        else:  # tok_lim
            a_sents = a.sentences or ()
            b_sents = b.sentences or ()
            budget_a = math.floor(a.token_len * r)
            budget_b = math.floor(b.token_len * r)
            tail: list[Segment] = []
            total = 0
            for s in reversed(a_sents):
                if total + s.token_len > budget_a:
                    break
                tail.insert(0, s)
                total += s.token_len
            head: list[Segment] = []
            total = 0
            for s in b_sents:
                if total + s.token_len > budget_b:
                    break
                head.append(s)
                total += s.token_len
            prefixes[i + 1] = _sentence_tokens(tail, tok)
            suffixes[i] = _sentence_tokens(head, tok)

    out = []
    for i, blob in enumerate(old):
        if not prefixes[i] and not suffixes[i]:
            out.append(replace(blob, position=i))
            continue
        tokens = prefixes[i] + tok.tokenize(blob.text) + suffixes[i]
        out.append(Segment(text=tok.join(tokens), token_len=len(tokens), position=i))
    return SegmentedDocument(doc_id=blobs.doc_id, segments=tuple(out))


def _sentence_tokens(sentences: Sequence[Segment], tok: Tokenizer) -> list[str]:
    tokens: list[str] = []
    for s in sentences:
        tokens.extend(tok.tokenize(s.text))
    return tokens


class Segmenter(TransformerMixin, BaseEstimator):
    """Stateless transformer from documents to segment lists.

    ``strategy`` selects "sbs", "blob", or "ofls"; ``fl`` and ``or_rate``
    configure the sliding window, ``max_tokens`` the sentence bundles, and
    ``blob_overlap`` ("tok" | "sent" | "tok_lim", with ``blob_overlap_r`` or
    ``blob_overlap_n``) the optional bundle-boundary overlap.
    """

    def __init__(self, strategy="ofls", fl=30, or_rate=0.5, max_tokens=64,
                 blob_overlap=None, blob_overlap_r=0.15, blob_overlap_n=1,
                 tokenizer=None):
        self.strategy = strategy
        self.fl = fl
        self.or_rate = or_rate
        self.max_tokens = max_tokens
        self.blob_overlap = blob_overlap
        self.blob_overlap_r = blob_overlap_r
        self.blob_overlap_n = blob_overlap_n
        self.tokenizer = tokenizer

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: Sequence[Document]) -> list[SegmentedDocument]:
        tok = self.tokenizer or WhitespaceTokenizer()
        if self.strategy == "sbs":
            return [segment_sbs(doc, tok) for doc in X]
        if self.strategy == "ofls":
            return [segment_ofls(doc, tok, self.fl, self.or_rate) for doc in X]
        if self.strategy == "blob":
            out = [segment_blob(doc, tok, self.max_tokens) for doc in X]
            if self.blob_overlap is not None:
                out = [
                    apply_blob_overlap(segdoc, self.blob_overlap, tok,
                                       r=self.blob_overlap_r, n=self.blob_overlap_n)
                    for segdoc in out
                ]
            return out
        raise ValueError(f"unknown strategy {self.strategy!r}")


def write_segments(segdocs: Sequence[SegmentedDocument], segments_path, index_path) -> None:
    """Write one segment per line plus the sidecar index
    ``{doc_id, start_line, n_segments}`` in corpus order."""
    entries = []
    line = 0
    with open(segments_path, "w", encoding="utf-8", newline="\n") as fh:
        for segdoc in segdocs:
            for seg in segdoc.segments:
                if "\n" in seg.text:
                    raise ValueError(
                        f"segment of {segdoc.doc_id!r} contains a line break; "
                        "cannot serialize one-per-line")
                fh.write(seg.text + "\n")
            entries.append({"doc_id": segdoc.doc_id, "start_line": line,
                            "n_segments": len(segdoc.segments)})
            line += len(segdoc.segments)
    with open(index_path, "w", encoding="utf-8") as fh:
        json.dump({"docs": entries}, fh, ensure_ascii=False, indent=0)
        fh.write("\n")


def read_segment_index(index_path) -> list[dict]:
    with open(index_path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return data["docs"]
