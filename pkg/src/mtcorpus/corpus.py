"""Canonical data model and streaming I/O for corpora.

The on-disk format is JSONL with fields {id, text, meta}, one document per
line; a plain-text format (one document per line, synthesized ids
"line-<n>") is supported for raw dumps. Readers stream with memory bounded
by the largest single document.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

FORMATS = ("jsonl", "text")

RELATION_SIMPLIFICATION = "natural-simplified"
RELATION_TRANSLATION = "source-translation"
RELATIONS = (RELATION_SIMPLIFICATION, RELATION_TRANSLATION)


class CorpusError(ValueError):
    """Malformed corpus input; the message carries line/byte context."""


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.doc_id:
            raise CorpusError("document with empty doc_id")


@dataclass(frozen=True)
class SentenceSpan:
    """Byte offsets of one sentence into the UTF-8 encoding of the text."""

    doc_id: str
    index: int
    start: int
    end: int

    def __post_init__(self):
        if self.index < 0 or not 0 <= self.start < self.end:
            raise CorpusError(
                f"invalid span for doc {self.doc_id!r}: index {self.index}, "
                f"bytes [{self.start}, {self.end})"
            )


@dataclass(frozen=True)
class ParallelPair:
    pair_id: str
    side_a: Document
    side_b: Document
    relation: str = RELATION_SIMPLIFICATION

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise CorpusError(f"unknown pair relation {self.relation!r}")
        if not (self.pair_id == self.side_a.doc_id == self.side_b.doc_id):
            raise CorpusError(
                f"pair {self.pair_id!r}: sides carry doc_ids "
                f"{self.side_a.doc_id!r} / {self.side_b.doc_id!r}"
            )


@dataclass(frozen=True)
class MetricRecord:
    """Per-pair metric vector; depth_ratio/cosine are None when unavailable."""

    pair_id: str
    fre_a: float
    fre_b: float
    compression: float
    split_diff: int
    rouge2: float
    rougeL: float
    depth_ratio: float | None = None
    cosine: float | None = None
    outlier_flags: frozenset = frozenset()


@dataclass
class CorpusManifest:
    """Corpus bookkeeping: document count plus token counts per vocabulary."""

    name: str
    documents: int
    token_counts: dict = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self):
        if self.documents < 0:
            raise CorpusError(f"manifest {self.name!r}: negative document count")
        for vocab, count in self.token_counts.items():
            if count < 0:
                raise CorpusError(
                    f"manifest {self.name!r}: negative token count for {vocab!r}"
                )


@dataclass
class JoinReport:
    unmatched_a: list
    unmatched_b: list


def _open_binary(path) -> IO[bytes]:
    if str(path) == "-":
        return sys.stdin.buffer
    return open(path, "rb")


def open_text_in(path) -> tuple[IO[str], bool]:
    """(handle, should_close); "-" reads stdin."""
    if str(path) == "-":
        return sys.stdin, False
    return open(path, encoding="utf-8"), True


def open_text_out(path) -> tuple[IO[str], bool]:
    """(handle, should_close); "-" writes stdout."""
    if str(path) == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def _parse_jsonl_record(line: str, lineno: int, path) -> Document:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusError(f"{path}: line {lineno}: malformed JSON ({e.msg})") from e
    if not isinstance(obj, dict):
        raise CorpusError(f"{path}: line {lineno}: record is not a JSON object")
    for key in ("id", "text"):
        if key not in obj:
            raise CorpusError(f"{path}: line {lineno}: missing {key!r} field")
    if not isinstance(obj["text"], str):
        raise CorpusError(f"{path}: line {lineno}: 'text' is not a string")
    meta = obj.get("meta") or {}
    if not isinstance(meta, dict):
        raise CorpusError(f"{path}: line {lineno}: 'meta' is not an object")
    return Document(doc_id=str(obj["id"]), text=obj["text"], meta=meta)


def read_corpus(path, fmt: str = "jsonl") -> Iterator[Document]:
    """Stream documents from `path` ("-" reads stdin) in file order.

    Memory stays O(largest document) regardless of file size.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {fmt!r}; expected one of {FORMATS}")
    fh = _open_binary(path)
    offset = 0
    try:
        for lineno, raw in enumerate(fh, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise CorpusError(
                    f"{path}: invalid UTF-8 at byte {offset + e.start} (line {lineno})"
                ) from e
            offset += len(raw)
            if line.endswith("\n"):
                line = line[:-1]
            if line.endswith("\r"):
                line = line[:-1]
            if fmt == "jsonl":
                if not line.strip():
                    continue
                yield _parse_jsonl_record(line, lineno, path)
            else:
                yield Document(doc_id=f"line-{lineno}", text=line)
    finally:
        if fh is not sys.stdin.buffer:
            fh.close()


def write_corpus(docs: Iterable[Document], path, fmt: str = "jsonl") -> int:
    """Write documents; returns the number written.

    JSONL round-trips (doc_id, text, meta) exactly; the plain-text format
    preserves texts only and rejects texts containing newlines.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown corpus format {fmt!r}; expected one of {FORMATS}")
    fh, close = open_text_out(path)
    n = 0
    try:
        for doc in docs:
            if fmt == "jsonl":
                rec = {"id": doc.doc_id, "text": doc.text, "meta": doc.meta}
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            else:
                if "\n" in doc.text or "\r" in doc.text:
                    raise CorpusError(
                        f"{path}: document {doc.doc_id!r} contains a line break; "
                        "plain-text format is one document per line"
                    )
                fh.write(doc.text + "\n")
            n += 1
    finally:
        if close:
            fh.close()
    return n


def join_parallel(
    stream_a: Iterable[Document],
    stream_b: Iterable[Document],
    relation: str = RELATION_SIMPLIFICATION,
) -> tuple[list[ParallelPair], JoinReport]:
    """Pair documents sharing an id; side_a order is preserved.

    Ids present on only one side are reported and excluded, not errors;
    a duplicate id within one stream is an error.
    """
    b_docs: dict[str, Document] = {}
    for doc in stream_b:
        if doc.doc_id in b_docs:
            raise CorpusError(f"duplicate doc_id {doc.doc_id!r} in side_b stream")
        b_docs[doc.doc_id] = doc
    pairs: list[ParallelPair] = []
    unmatched_a: list[str] = []
    seen_a: set[str] = set()
    matched: set[str] = set()
    for doc in stream_a:
        if doc.doc_id in seen_a:
            raise CorpusError(f"duplicate doc_id {doc.doc_id!r} in side_a stream")
        seen_a.add(doc.doc_id)
        other = b_docs.get(doc.doc_id)
        if other is None:
            unmatched_a.append(doc.doc_id)
        else:
            matched.add(doc.doc_id)
            pairs.append(ParallelPair(doc.doc_id, doc, other, relation))
    unmatched_b = [d for d in b_docs if d not in matched]
    return pairs, JoinReport(unmatched_a, unmatched_b)
