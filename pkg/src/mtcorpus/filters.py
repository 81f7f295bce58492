"""Sentence segmentation, pre/post-MT filtering, and document reconstruction.

Translation happens at the sentence level: documents are segmented, each
sentence crosses the wire as a {doc_id, index, text} record, and surviving
documents are reassembled afterwards. Both filters drop whole documents:
pre-MT when any sentence falls outside the token length bounds, post-MT
when any sentence pair exceeds the target/source length ratio cap.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .corpus import CorpusError, Document, SentenceSpan, open_text_in, open_text_out
from .textunits import segment_text, word_tokenize


@dataclass(frozen=True)
class LengthBounds:
    min_tokens: int
    max_tokens: int

    def __post_init__(self):
        if not 1 <= self.min_tokens <= self.max_tokens:
            raise ValueError(
                f"invalid length bounds ({self.min_tokens}, {self.max_tokens})"
            )


# Per-language profiles: Indonesian 3-250 tokens, Tamil 4-150 tokens.
PROFILE_BOUNDS = {
    "id": LengthBounds(3, 250),
    "ta": LengthBounds(4, 150),
}

DEFAULT_RATIO_CAP = 2.0


@dataclass(frozen=True)
class SentenceRecord:
    """One sentence of one document; the unit exchanged with the MT endpoint."""

    doc_id: str
    index: int
    text: str


@dataclass(frozen=True)
class SentencePairRatio:
    doc_id: str
    index: int
    source_tokens: int
    target_tokens: int

    @property
    def ratio(self) -> float:
        if self.source_tokens == 0:
            return math.inf
        return self.target_tokens / self.source_tokens


@dataclass
class FilterReport:
    kept: int = 0
    dropped: int = 0
    reasons: Counter = field(default_factory=Counter)

    def to_dict(self) -> dict:
        return {"kept": self.kept, "dropped": self.dropped, "reasons": dict(self.reasons)}


class ReconstructionError(CorpusError):
    def __init__(self, doc_id: str, missing_index: int):
        super().__init__(f"doc {doc_id!r} missing sentence {missing_index}")
        self.doc_id = doc_id
        self.missing_index = missing_index


def segment_sentences(doc: Document) -> list[SentenceSpan]:
    """Sentence spans of a document as byte offsets into its UTF-8 text."""
    spans = []
    bpos = cpos = 0
    for i, (cs, ce) in enumerate(segment_text(doc.text)):
        bpos += len(doc.text[cpos:cs].encode("utf-8"))
        bstart = bpos
        bpos += len(doc.text[cs:ce].encode("utf-8"))
        spans.append(SentenceSpan(doc.doc_id, i, bstart, bpos))
        cpos = ce
    return spans


def span_text(doc: Document, span: SentenceSpan) -> str:
    return doc.text.encode("utf-8")[span.start : span.end].decode("utf-8")


def sentence_texts(doc: Document) -> list[str]:
    return [doc.text[s:e] for s, e in segment_text(doc.text)]


def segment_corpus(docs: Iterable[Document]) -> Iterator[SentenceRecord]:
    """Flatten documents into indexed sentence records, in document order."""
    for doc in docs:
        for i, text in enumerate(sentence_texts(doc)):
            yield SentenceRecord(doc.doc_id, i, text)


def pre_mt_filter(
    docs: Iterable[Document], bounds: LengthBounds
) -> tuple[list[Document], FilterReport]:
    """Drop a document when any of its sentences is outside the token bounds."""
    kept: list[Document] = []
    report = FilterReport()
    for doc in docs:
        reason = None
        for text in sentence_texts(doc):
            n = len(word_tokenize(text))
            if n < bounds.min_tokens:
                reason = "too_short"
                break
            if n > bounds.max_tokens:
                reason = "too_long"
                break
        if reason:
            report.dropped += 1
            report.reasons[reason] += 1
        else:
            kept.append(doc)
            report.kept += 1
    return kept, report


def sentence_pair_ratios(
    sources: Iterable[SentenceRecord], targets: Iterable[SentenceRecord]
) -> list[SentencePairRatio]:
    """Token-length ratios of aligned sentence pairs.

    Every source sentence must have exactly one target and vice versa;
    a missing side is an error naming the doc and index.
    """
    src = {}
    for s in sources:
        key = (s.doc_id, s.index)
        if key in src:
            raise CorpusError(f"duplicate source sentence: doc {s.doc_id!r} index {s.index}")
        src[key] = s
    ratios = []
    seen = set()
    for t in targets:
        key = (t.doc_id, t.index)
        if key in seen:
            raise CorpusError(f"duplicate target sentence: doc {t.doc_id!r} index {t.index}")
        seen.add(key)
        s = src.get(key)
        if s is None:
            raise CorpusError(
                f"target sentence without source: doc {t.doc_id!r} index {t.index}"
            )
        ratios.append(
            SentencePairRatio(
                doc_id=t.doc_id,
                index=t.index,
                source_tokens=len(word_tokenize(s.text)),
                target_tokens=len(word_tokenize(t.text)),
            )
        )
    for key in src:
        if key not in seen:
            raise CorpusError(
                f"source sentence without target: doc {key[0]!r} index {key[1]}"
            )
    return ratios


def post_mt_filter(
    sources: Iterable[SentenceRecord],
    targets: Iterable[SentenceRecord],
    ratio_cap: float = DEFAULT_RATIO_CAP,
) -> tuple[list[SentenceRecord], FilterReport]:
    """Drop a document when any sentence pair has ratio strictly above the cap.

    Returns the surviving target sentences (input order) and a document-level
    report. A pair exactly at the cap is kept.
    """
    targets = list(targets)
    ratios = sentence_pair_ratios(sources, targets)
    bad_docs = {r.doc_id for r in ratios if r.ratio > ratio_cap}
    doc_ids = []
    seen = set()
    for t in targets:
        if t.doc_id not in seen:
            seen.add(t.doc_id)
            doc_ids.append(t.doc_id)
    kept = [t for t in targets if t.doc_id not in bad_docs]
    report = FilterReport(
        kept=len(doc_ids) - len(bad_docs),
        dropped=len(bad_docs),
        reasons=Counter({"ratio_above_cap": len(bad_docs)} if bad_docs else {}),
    )
    return kept, report


def reconstruct_documents(sentences: Iterable[SentenceRecord]) -> list[Document]:
    """Rejoin translated sentences into documents with single-space joins.

    Documents come out in order of first appearance; each document's indices
    must form a contiguous 0..n-1 set.
    """
    by_doc: dict[str, dict[int, str]] = {}
    order: list[str] = []
    for s in sentences:
        slot = by_doc.setdefault(s.doc_id, {})
        if s.index in slot:
            raise CorpusError(f"doc {s.doc_id!r} has duplicate sentence index {s.index}")
        slot[s.index] = s.text
        if len(slot) == 1:
            order.append(s.doc_id)
    docs = []
    for doc_id in order:
        slot = by_doc[doc_id]
        parts = []
        for k in range(len(slot)):
            if k not in slot:
                raise ReconstructionError(doc_id, k)
            parts.append(slot[k])
        docs.append(Document(doc_id, " ".join(parts)))
    return docs


@dataclass
class ParallelismReport:
    removed_a: list
    removed_b: list


def enforce_parallelism(
    docs_a: Iterable[Document], docs_b: Iterable[Document]
) -> tuple[list[Document], list[Document], ParallelismReport]:
    """Restrict both corpora to the shared id set, preserving each side's order."""
    a = list(docs_a)
    b = list(docs_b)
    ids_a = {d.doc_id for d in a}
    ids_b = {d.doc_id for d in b}
    shared = ids_a & ids_b
    report = ParallelismReport(sorted(ids_a - shared), sorted(ids_b - shared))
    return (
        [d for d in a if d.doc_id in shared],
        [d for d in b if d.doc_id in shared],
        report,
    )


def write_sentence_records(records: Iterable[SentenceRecord], path) -> int:
    """Sentence exchange format: JSONL records {doc_id, index, text}."""
    fh, close = open_text_out(path)
    n = 0
    try:
        for r in records:
            fh.write(
                json.dumps(
                    {"doc_id": r.doc_id, "index": r.index, "text": r.text},
                    ensure_ascii=False,
                )
                + "\n"
            )
            n += 1
    finally:
        if close:
            fh.close()
    return n


def read_sentence_records(path) -> list[SentenceRecord]:
    fh, close = open_text_in(path)
    records = []
    try:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(
                    SentenceRecord(str(obj["doc_id"]), int(obj["index"]), obj["text"])
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise CorpusError(f"{path}: line {lineno}: bad sentence record ({e})") from e
    finally:
        if close:
            fh.close()
    return records
