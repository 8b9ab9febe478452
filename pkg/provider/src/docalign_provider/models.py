"""Encoder and tokenizer backends.

Model names resolve to sentence-transformers checkpoints, except the
reserved name ``hash``: a dependency-free, fully deterministic feature-
hashing encoder (with whitespace tokenization) meant for tests, fixtures,
and offline pipelines. Output is always float32 regardless of a model's
native precision.
"""

from __future__ import annotations

import hashlib
import re
from typing import Iterable, Protocol

import numpy as np

HASH_MODEL = "hash"
_TOKEN_RE = re.compile(r"\S+")


class Encoder(Protocol):
    dim: int

    def encode(self, lines: list[str], batch_size: int) -> np.ndarray: ...


class HashEncoder:
    """Feature-hash tokens and character trigrams into a fixed dimension.
    Same text, same vector, on any machine."""

    def __init__(self, dim: int = 256):
        self.dim = dim

    def encode(self, lines: list[str], batch_size: int = 32) -> np.ndarray:
        out = np.zeros((len(lines), self.dim), dtype=np.float32)
        for row, line in enumerate(lines):
            feats = line.split()
            padded = f" {line} "
            feats += [padded[i:i + 3] for i in range(len(padded) - 2)]
            if not feats:
                out[row, 0] = 1.0
                continue
            for feat in feats:
                digest = hashlib.sha1(feat.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "little") % self.dim
                sign = 1.0 if digest[4] % 2 else -1.0
                out[row, bucket] += sign
            if not out[row].any():
                out[row, 0] = 1.0  # engine rejects zero rows
        return out


class SentenceTransformerEncoder:
    def __init__(self, model_name: str, device: str | None = None):
        from sentence_transformers import SentenceTransformer
        self.model = SentenceTransformer(model_name, device=device)
        self.dim = self.model.get_sentence_embedding_dimension()

    def encode(self, lines: list[str], batch_size: int = 32) -> np.ndarray:
        vecs = self.model.encode(lines, batch_size=batch_size,
                                 convert_to_numpy=True, show_progress_bar=False)
        return np.asarray(vecs, dtype=np.float32)


def load_encoder(model_name: str, dim: int = 256, device: str | None = None) -> Encoder:
    if model_name == HASH_MODEL:
        return HashEncoder(dim=dim)
    return SentenceTransformerEncoder(model_name, device=device)


def whitespace_offsets(line: str) -> list[tuple[int, int]]:
    return [m.span() for m in _TOKEN_RE.finditer(line)]


class WhitespaceTokenizerBackend:
    def offsets(self, lines: Iterable[str]) -> list[list[tuple[int, int]]]:
        return [whitespace_offsets(line) for line in lines]


class HfTokenizerBackend:
    def __init__(self, model_name: str):
        from transformers import AutoTokenizer
        self.tokenizer = AutoTokenizer.from_pretrained(model_name, use_fast=True)

    def offsets(self, lines: Iterable[str]) -> list[list[tuple[int, int]]]:
        out = []
        for line in lines:
            enc = self.tokenizer(line, return_offsets_mapping=True,
                                 add_special_tokens=False)
            out.append([(s, e) for s, e in enc["offset_mapping"] if e > s])
        return out


def load_tokenizer(model_name: str):
    if model_name == HASH_MODEL:
        return WhitespaceTokenizerBackend()
    return HfTokenizerBackend(model_name)
