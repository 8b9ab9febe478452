"""Bilingual document collections: ingestion, deduplication, serialization.

The on-disk corpus format is one record per line, UTF-8, LF-terminated::

    URL \\t hostname \\t doc_id \\t base64(content)

with standard padded base64 (RFC 4648). Malformed lines (fewer than four
fields, undecodable base64, invalid UTF-8) are skipped and counted rather
than aborting: web-crawl data is dirty and a single bad line must not kill
an ingestion run.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
from dataclasses import dataclass, field
from typing import Iterator

from .errors import EmptyCorpusError

logger = logging.getLogger(__name__)

SIDES = ("source", "target")


@dataclass(frozen=True)
class Document:
    """One web document on one language side."""

    doc_id: str
    url: str
    domain: str
    lang: str  # "source" | "target"
    text: str

    def __post_init__(self):
        if self.lang not in SIDES:
            raise ValueError(f"lang must be one of {SIDES}, got {self.lang!r}")
        if not self.text:
            raise ValueError(f"document {self.doc_id!r} has empty text")


@dataclass(frozen=True)
class DocumentStore:
    """Immutable, ordered collection of documents for one corpus side.

    Iteration order is ingestion order; ``by_id`` maps doc_id to position.
    Safe to share across threads read-only.
    """

    side: str
    docs: tuple[Document, ...]
    by_id: dict[str, int] = field(init=False, compare=False, repr=False)
    n_skipped: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        index: dict[str, int] = {}
        for pos, doc in enumerate(self.docs):
            if doc.doc_id in index:
                raise ValueError(f"duplicate doc_id {doc.doc_id!r} in {self.side} store")
            index[doc.doc_id] = pos
        object.__setattr__(self, "by_id", index)

    def __len__(self) -> int:
        return len(self.docs)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.by_id

    def get(self, doc_id: str) -> Document:
        return self.docs[self.by_id[doc_id]]


def _decode_line(line: str, lineno: int, side: str) -> Document | None:
    fields = line.split("\t")
    if len(fields) < 4:
        logger.debug("line %d: %d field(s), need 4", lineno, len(fields))
        return None
    url, domain, doc_id, payload = fields[0], fields[1], fields[2], fields[3]
    try:
        raw = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError):
        logger.debug("line %d: invalid base64", lineno)
        return None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        logger.debug("line %d: payload is not UTF-8", lineno)
        return None
    if not text:
        logger.debug("line %d: empty document", lineno)
        return None
    return Document(doc_id=doc_id, url=url, domain=domain, lang=side, text=text)


def ingest_tsv(path, side: str) -> DocumentStore:
    """Read a base64 TSV corpus file into a DocumentStore.

    Skipped-line count is reported on the returned store (``n_skipped``).
    Raises EmptyCorpusError when no line yields a document; lets I/O errors
    propagate (an unreadable file is fatal).
    """
    docs: list[Document] = []
    seen: set[str] = set()
    skipped = 0
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            doc = _decode_line(line, lineno, side)
            if doc is None or doc.doc_id in seen:
                skipped += 1
                continue
            seen.add(doc.doc_id)
            docs.append(doc)
    if not docs:
        raise EmptyCorpusError(f"empty corpus: no usable documents in {path}")
    if skipped:
        logger.info("ingest %s: %d document(s), %d line(s) skipped", path, len(docs), skipped)
    return DocumentStore(side=side, docs=tuple(docs), n_skipped=skipped)


def ingest_jsonl(path, side: str) -> DocumentStore:
    """Alternate ingestion path for test fixtures: one JSON object per line
    with keys url, domain, doc_id, text. Same skip-and-count semantics."""
    docs: list[Document] = []
    seen: set[str] = set()
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                doc = Document(
                    doc_id=obj["doc_id"], url=obj["url"], domain=obj["domain"],
                    lang=side, text=obj["text"],
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                skipped += 1
                continue
            if doc.doc_id in seen:
                skipped += 1
                continue
            seen.add(doc.doc_id)
            docs.append(doc)
    if not docs:
        raise EmptyCorpusError(f"empty corpus: no usable documents in {path}")
    return DocumentStore(side=side, docs=tuple(docs), n_skipped=skipped)


def write_tsv(store: DocumentStore, path) -> None:
    """Serialize a store back to the base64 TSV format, bit-exact round trip."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in store:
            payload = base64.b64encode(doc.text.encode("utf-8")).decode("ascii")
            fh.write(f"{doc.url}\t{doc.domain}\t{doc.doc_id}\t{payload}\n")


def dedup_exact(store: DocumentStore) -> DocumentStore:
    """Drop later documents whose decoded text exactly matches an earlier one
    within the same domain. Cross-domain duplicates are kept so that small
    hostnames are never emptied out."""
    kept: list[Document] = []
    seen: set[tuple[str, str]] = set()
    for doc in store:
        key = (doc.domain, doc.text)
        if key in seen:
            continue
        seen.add(key)
        kept.append(doc)
    removed = len(store) - len(kept)
    if removed:
        logger.info("dedup %s side: removed %d duplicate(s)", store.side, removed)
    return DocumentStore(side=store.side, docs=tuple(kept), n_skipped=store.n_skipped)
