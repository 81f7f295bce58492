"""Corpus engineering toolkit for machine-translated pretraining data."""

from .corpus import (
    CorpusError,
    Document,
    MetricRecord,
    ParallelPair,
    SentenceSpan,
    join_parallel,
    read_corpus,
    write_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "CorpusError",
    "Document",
    "MetricRecord",
    "ParallelPair",
    "SentenceSpan",
    "join_parallel",
    "read_corpus",
    "write_corpus",
    "__version__",
]
