"""Per-dataset statistics and per-pair cross-dataset metrics.

Per-dataset: total words, types, type-token ratio, unigram entropy.
Per-pair: Flesch reading ease on both sides, compression level, sentence
split difference, dependency depth ratio, ROUGE-2/L overlap, embedding
cosine. Pair metrics are pure functions; the dataset pass is a single
streaming scan plus a frequency table.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import MetricRecord, ParallelPair, open_text_in, open_text_out
from .textunits import count_syllables, segment_text, word_tokenize

BUCKETS = ("exact_match", "high", "medium", "low", "exact_mismatch")

RECORD_FIELDS = (
    "pair_id", "fre_a", "fre_b", "compression", "split_diff",
    "rouge2", "rougeL", "depth_ratio", "cosine", "outlier_flags",
)


@dataclass(frozen=True)
class PerDatasetStats:
    total_words: int
    types: int
    ttr: float  # percent
    unigram_entropy: float  # bits


@dataclass(frozen=True)
class CrossDatasetStats:
    n_pairs: int
    pct_compression_lt_80: float
    pct_exact_match: float
    pct_high: float
    pct_medium: float
    pct_low: float
    pct_exact_mismatch: float
    pct_sim_gt_80: float | None


@dataclass(frozen=True)
class ParsedSentence:
    """Dependency parse: heads are 0-based parent indices, -1 marks the root."""

    tokens: tuple
    heads: tuple


def ttr(types: int, total_words: int) -> float:
    """Type-token ratio in percent."""
    if total_words <= 0:
        raise ValueError("type-token ratio needs at least one word")
    return 100.0 * types / total_words


def unigram_entropy(freqs: Mapping) -> float:
    """Shannon entropy in bits of the relative frequencies; zero counts ignored."""
    total = 0
    for c in freqs.values():
        if c > 0:
            total += c
    if total == 0:
        raise ValueError("entropy of an all-zero frequency table")
    h = 0.0
    for c in freqs.values():
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def per_dataset_stats(docs) -> PerDatasetStats:
    """One streaming pass; ttr and entropy come from the final type table."""
    freqs: Counter = Counter()
    total = 0
    for doc in docs:
        toks = word_tokenize(doc.text)
        total += len(toks)
        freqs.update(toks)
    if total == 0:
        raise ValueError("no tokens in corpus")
    return PerDatasetStats(
        total_words=total,
        types=len(freqs),
        ttr=ttr(len(freqs), total),
        unigram_entropy=unigram_entropy(freqs),
    )


def flesch_reading_ease(text: str) -> float:
    """Raw (unclipped) score: 206.835 - 1.015·(words/sentence) - 84.6·(syllables/word)."""
    words = word_tokenize(text)
    if not words:
        raise ValueError("Flesch reading ease of a text with no words")
    sentences = max(1, len(segment_text(text)))
    syllables = sum(count_syllables(w) for w in words)
    return 206.835 - 1.015 * (len(words) / sentences) - 84.6 * (syllables / len(words))


def clip_fre(raw: float) -> float:
    """Clamp a raw Flesch score onto its interpretable [0, 100] range."""
    if math.isnan(raw):
        raise ValueError("cannot clip a NaN Flesch score")
    return min(100.0, max(0.0, raw))


def compression_level(pair: ParallelPair) -> float:
    """Word count of side_b over side_a (simplified over natural)."""
    n = len(word_tokenize(pair.side_a.text))
    if n == 0:
        raise ValueError(f"pair {pair.pair_id!r}: natural side has no words")
    return len(word_tokenize(pair.side_b.text)) / n


def sentence_split_difference(pair: ParallelPair) -> int:
    """Sentence count of side_b minus side_a."""
    return len(segment_text(pair.side_b.text)) - len(segment_text(pair.side_a.text))


def dep_tree_depth(parsed: ParsedSentence) -> int:
    """Longest root-to-leaf path, counted in nodes."""
    heads = parsed.heads
    n = len(heads)
    if n == 0:
        raise ValueError("empty dependency parse")
    roots = [i for i, h in enumerate(heads) if h == -1]
    if len(roots) != 1:
        raise ValueError(f"dependency parse has {len(roots)} roots, expected exactly 1")
    for i, h in enumerate(heads):
        if h != -1 and not 0 <= h < n:
            raise ValueError(f"token {i} has out-of-range head {h}")
    depths = [0] * n
    depths[roots[0]] = 1
    for i in range(n):
        if depths[i]:
            continue
        chain = [i]
        j = heads[i]
        while depths[j] == 0:
            chain.append(j)
            if len(chain) > n:
                raise ValueError("cycle in dependency parse")
            j = heads[j]
        d = depths[j]
        for node in reversed(chain):
            d += 1
            depths[node] = d
    return max(depths)


def depth_ratio(
    parses_a: Sequence[ParsedSentence], parses_b: Sequence[ParsedSentence]
) -> float | None:
    """Max sentence depth on side_b over side_a; None when either side lacks parses."""
    if not parses_a or not parses_b:
        return None
    return max(dep_tree_depth(p) for p in parses_b) / max(dep_tree_depth(p) for p in parses_a)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _overlap_f1(cand: Counter, ref: Counter) -> float:
    overlap = sum((cand & ref).values())
    if overlap == 0:
        return 0.0
    p = overlap / sum(cand.values())
    r = overlap / sum(ref.values())
    return 2 * p * r / (p + r)


def rouge2(candidate: str, reference: str) -> float:
    """F1 over bigram multisets; falls back to unigrams when a side has <2 tokens."""
    c = word_tokenize(candidate)
    r = word_tokenize(reference)
    if c == r:
        return 1.0
    n = 2 if min(len(c), len(r)) >= 2 else 1
    return _overlap_f1(_ngram_counts(c, n), _ngram_counts(r, n))


def _lcs_len(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rougeL(candidate: str, reference: str) -> float:
    """F1 from the longest common subsequence over word tokens."""
    c = word_tokenize(candidate)
    r = word_tokenize(reference)
    if c == r:
        return 1.0
    lcs = _lcs_len(c, r)
    if lcs == 0:
        return 0.0
    p = lcs / len(c)
    rec = lcs / len(r)
    return 2 * p * rec / (p + rec)


def overlap_bucket(r2: float) -> str:
    """Bucket a ROUGE-2 value; boundaries: 1 / (0.8,1) / (0.4,0.8] / (0,0.4] / 0."""
    if not 0.0 <= r2 <= 1.0:
        raise ValueError(f"ROUGE-2 value {r2} outside [0, 1]")
    if r2 == 1.0:
        return "exact_match"
    if r2 > 0.8:
        return "high"
    if r2 > 0.4:
        return "medium"
    if r2 > 0.0:
        return "low"
    return "exact_mismatch"


def cosine_similarity(vec_a: Sequence[float], vec_b: Sequence[float]) -> float:
    if len(vec_a) != len(vec_b):
        raise ValueError(f"dimension mismatch: {len(vec_a)} vs {len(vec_b)}")
    dot = na = nb = 0.0
    for x, y in zip(vec_a, vec_b):
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity of a zero vector")
    return dot / math.sqrt(na * nb)


def pair_metrics(
    pair: ParallelPair,
    parses_a: Sequence[ParsedSentence] = (),
    parses_b: Sequence[ParsedSentence] = (),
    embedding_a: Sequence[float] | None = None,
    embedding_b: Sequence[float] | None = None,
) -> MetricRecord:
    """Full metric vector for one pair; depth/cosine stay absent without inputs."""
    cos = None
    if embedding_a is not None and embedding_b is not None:
        cos = cosine_similarity(embedding_a, embedding_b)
    return MetricRecord(
        pair_id=pair.pair_id,
        fre_a=flesch_reading_ease(pair.side_a.text),
        fre_b=flesch_reading_ease(pair.side_b.text),
        compression=compression_level(pair),
        split_diff=sentence_split_difference(pair),
        rouge2=rouge2(pair.side_b.text, pair.side_a.text),
        rougeL=rougeL(pair.side_b.text, pair.side_a.text),
        depth_ratio=depth_ratio(parses_a, parses_b),
        cosine=cos,
    )


def cross_dataset_stats(
    pairs: Iterable[ParallelPair],
    embeddings: Mapping | None = None,
) -> CrossDatasetStats:
    """Bucket percentages over all pairs.

    embeddings maps pair_id -> (vec_a, vec_b); the similarity share is
    computed over pairs that have embeddings and omitted when none do.
    """
    n = 0
    comp_lt = 0
    buckets: Counter = Counter()
    sim_n = sim_gt = 0
    for pair in pairs:
        n += 1
        if compression_level(pair) < 0.8:
            comp_lt += 1
        buckets[overlap_bucket(rouge2(pair.side_b.text, pair.side_a.text))] += 1
        if embeddings is not None:
            vecs = embeddings.get(pair.pair_id)
            if vecs is not None:
                sim_n += 1
                if cosine_similarity(vecs[0], vecs[1]) > 0.8:
                    sim_gt += 1
    if n == 0:
        raise ValueError("no pairs to compare")
    return CrossDatasetStats(
        n_pairs=n,
        pct_compression_lt_80=100.0 * comp_lt / n,
        pct_exact_match=100.0 * buckets["exact_match"] / n,
        pct_high=100.0 * buckets["high"] / n,
        pct_medium=100.0 * buckets["medium"] / n,
        pct_low=100.0 * buckets["low"] / n,
        pct_exact_mismatch=100.0 * buckets["exact_mismatch"] / n,
        pct_sim_gt_80=(100.0 * sim_gt / sim_n) if sim_n else None,
    )


def record_to_dict(record: MetricRecord) -> dict:
    d = asdict(record)
    d["outlier_flags"] = sorted(record.outlier_flags)
    return d


def record_from_dict(d: Mapping) -> MetricRecord:
    return MetricRecord(
        pair_id=str(d["pair_id"]),
        fre_a=float(d["fre_a"]),
        fre_b=float(d["fre_b"]),
        compression=float(d["compression"]),
        split_diff=int(d["split_diff"]),
        rouge2=float(d["rouge2"]),
        rougeL=float(d["rougeL"]),
        depth_ratio=None if d.get("depth_ratio") is None else float(d["depth_ratio"]),
        cosine=None if d.get("cosine") is None else float(d["cosine"]),
        outlier_flags=frozenset(d.get("outlier_flags") or ()),
    )


def write_metric_records(records: Iterable[MetricRecord], path, fmt: str = "jsonl") -> int:
    """One row per pair_id, as JSONL or CSV (flags ';'-joined, absents empty)."""
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unknown record format {fmt!r}")
    fh, close = open_text_out(path)
    n = 0
    try:
        if fmt == "jsonl":
            for r in records:
                fh.write(json.dumps(record_to_dict(r), ensure_ascii=False) + "\n")
                n += 1
        else:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RECORD_FIELDS)
            for r in records:
                d = record_to_dict(r)
                row = []
                for f in RECORD_FIELDS:
                    v = d[f]
                    if f == "outlier_flags":
                        v = ";".join(v)
                    elif v is None:
                        v = ""
                    row.append(v)
                writer.writerow(row)
                n += 1
    finally:
        if close:
            fh.close()
    return n


def read_metric_records(path) -> list[MetricRecord]:
    fh, close = open_text_in(path)
    records = []
    try:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ValueError(f"{path}: line {lineno}: bad metric record ({e})") from e
    finally:
        if close:
            fh.close()
    return records


def read_parses(path) -> dict:
    """Load a CoNLL-U-subset parse file: doc_id -> list of ParsedSentence.

    Format: '# doc_id = X' introduces a document; sentences are blocks of
    'index<TAB>form<TAB>head' lines (1-based index, head 0 = root) separated
    by blank lines.
    """
    parses: dict = {}
    cur_doc = None
    tokens: list = []
    heads: list = []

    def flush():
        nonlocal tokens, heads
        if tokens:
            if cur_doc is None:
                raise ValueError(f"{path}: sentence block before any '# doc_id =' header")
            parses.setdefault(cur_doc, []).append(
                ParsedSentence(tuple(tokens), tuple(heads))
            )
            tokens, heads = [], []

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                flush()
                continue
            if line.startswith("#"):
                if "doc_id" in line and "=" in line:
                    flush()
                    cur_doc = line.split("=", 1)[1].strip()
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise ValueError(f"{path}: line {lineno}: expected 'index\\tform\\thead'")
            try:
                idx, head = int(parts[0]), int(parts[2])
            except ValueError as e:
                raise ValueError(f"{path}: line {lineno}: non-integer index/head") from e
            if idx != len(tokens) + 1:
                raise ValueError(f"{path}: line {lineno}: token index {idx} out of order")
            tokens.append(parts[1])
            heads.append(head - 1)  # CoNLL-U head 0 (root) -> -1
    flush()
    return parses
