"""Shared fixtures and the acceptance-suite reporting hook."""

from __future__ import annotations

import numpy as np
import pytest

from docalign.corpus import Document
from docalign.embedding_io import EmbeddingStore
from docalign.segmentation import Segment, SegmentedDocument


def make_doc(text: str, doc_id: str = "d0", side: str = "source",
             domain: str = "example.com") -> Document:
    return Document(doc_id=doc_id, url=f"http://{domain}/{doc_id}",
                    domain=domain, lang=side, text=text)


def segdoc(doc_id: str, texts, token_lens=None) -> SegmentedDocument:
    """Build a SegmentedDocument directly; token_lens default to whitespace counts."""
    if token_lens is None:
        token_lens = [len(t.split()) for t in texts]
    return SegmentedDocument(
        doc_id=doc_id,
        segments=tuple(Segment(text=t, token_len=n, position=i)
                       for i, (t, n) in enumerate(zip(texts, token_lens))),
    )


def store_from_rows(doc_rows: list[tuple[str, np.ndarray]], side: str = "source") -> EmbeddingStore:
    """Assemble an EmbeddingStore from (doc_id, rows) pairs, normalizing rows."""
    ranges = {}
    blocks = []
    start = 0
    for doc_id, rows in doc_rows:
        rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
        rows = rows / np.linalg.norm(rows, axis=1, keepdims=True)
        blocks.append(rows.astype(np.float32))
        ranges[doc_id] = (start, len(rows))
        start += len(rows)
    matrix = np.vstack(blocks)
    return EmbeddingStore(side=side, dim=matrix.shape[1], rows=matrix,
                          ranges=ranges, doc_order=tuple(i for i, _ in doc_rows))


def random_unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    rows = rng.standard_normal((n, d))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call" and outcome != "skipped":
                continue
            if "test_acceptance.py" not in str(getattr(report, "nodeid", "")):
                continue
            name = report.nodeid.split("::")[-1]
            lines.append((name, outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(set(lines)):
            terminalreporter.write_line(f"{outcome:<7} {name}")
