"""Embedding provider for the document alignment engine.

Runs a multilingual sentence-embedding model over a segments file and
writes the EMB1 binary format the engine consumes; also exposes the
model's tokenizer (counts + character offsets) so the engine can build
fixed-length windows over model tokens. Communicates with the engine
through files only.
"""

__version__ = "0.1.0"

DEFAULT_MODEL = "sentence-transformers/LaBSE"
