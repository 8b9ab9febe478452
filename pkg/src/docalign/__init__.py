"""Cross-lingual document alignment engine.

Two-stage pipeline: document vectors (Mean-Pool or window-pooled with
boilerplate down-weighting) feed an exact top-K cosine retriever; candidate
pairs are then re-scored with the bidirectional max-similarity score,
entropic optimal transport, or greedy mass transport, and filtered to a
1-1 matching. Includes the full evaluation suite (recall, soft recall,
source-side F1, randomization significance test, length-binned recall).
"""

__version__ = "0.1.0"

from .assignment import AlignmentSet, one_to_one
from .corpus import Document, DocumentStore, dedup_exact, ingest_jsonl, ingest_tsv, write_tsv
from .docvec import (
    DocVectorizer, DocVectorSet, PertSpec, build_lidf, mean_pool, pert_weights, tk_pert,
)
from .embedding_io import EmbeddingStore, cosine, read_emb1, write_emb1
from .errors import (
    ConfigError, ConsistencyError, DataError, DegenerateDocumentError, DocalignError,
    EmptyCorpusError, FormatError, MissingArtifactError, MissingDocumentError,
    UnsegmentableDocumentError,
)
from .evaluation import (
    EvalReport, GoldPairs, f1_source_side, levenshtein, normalized_levenshtein,
    randomization_test, recall, recall_by_length, soft_recall, weighted_average,
)
from .retrieval import CandidateList, TopKRetriever, topk
from .scoring import (
    ScoredPair, SinkhornResult, ThroughputReport, bimax, gmd_cost, gmd_score, maxsim,
    ot_score, rerank, seg_weights, sinkhorn_cost,
)
from .segmentation import (
    Segment, SegmentedDocument, Segmenter, WhitespaceTokenizer, apply_blob_overlap,
    segment_blob, segment_ofls, segment_sbs,
)

__all__ = [
    "AlignmentSet", "CandidateList", "ConfigError", "ConsistencyError", "DataError",
    "DegenerateDocumentError", "DocVectorSet", "DocVectorizer", "DocalignError",
    "Document", "DocumentStore", "EmbeddingStore", "EmptyCorpusError", "EvalReport",
    "FormatError", "GoldPairs", "MissingArtifactError", "MissingDocumentError",
    "PertSpec", "ScoredPair", "Segment", "SegmentedDocument", "Segmenter",
    "SinkhornResult", "ThroughputReport", "TopKRetriever", "UnsegmentableDocumentError",
    "WhitespaceTokenizer", "apply_blob_overlap", "bimax", "build_lidf", "cosine",
    "dedup_exact", "f1_source_side", "gmd_cost", "gmd_score", "ingest_jsonl",
    "ingest_tsv", "levenshtein", "maxsim", "mean_pool", "normalized_levenshtein",
    "one_to_one", "ot_score", "pert_weights", "randomization_test", "read_emb1",
    "recall", "recall_by_length", "rerank", "seg_weights", "segment_blob",
    "segment_ofls", "segment_sbs", "sinkhorn_cost", "soft_recall", "tk_pert", "topk",
    "weighted_average", "write_emb1", "write_tsv",
]
