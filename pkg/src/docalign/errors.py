"""Exception hierarchy shared across the alignment engine."""


class DocalignError(Exception):
    """Base class for all engine errors."""


class EmptyCorpusError(DocalignError):
    """Raised when ingestion produces zero usable documents."""


class UnsegmentableDocumentError(DocalignError):
    """Raised when a document yields no segments under the chosen strategy."""


class FormatError(DocalignError):
    """A binary or text artifact does not match its declared format."""


class ConsistencyError(DocalignError):
    """Two artifacts that must agree (e.g. embeddings vs. segment index) do not."""


class DataError(DocalignError):
    """Well-formed input carrying unusable values (e.g. a zero-norm embedding row)."""


class DegenerateDocumentError(DocalignError):
    """A document whose segment vectors cancel to zero and cannot be pooled."""


class MissingDocumentError(DocalignError):
    """A referenced document id has no text or no embedding rows."""


class MissingArtifactError(DocalignError):
    """A pipeline stage was invoked before its upstream artifact exists."""

    def __init__(self, message, required_stage=None):
        super().__init__(message)
        self.required_stage = required_stage


class ConfigError(DocalignError):
    """Pipeline configuration failed validation; carries every violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {v}" for v in self.violations))
