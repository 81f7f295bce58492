"""Balanced accuracy, seed aggregation, and deterministic report rendering.

Rendering is byte-deterministic for identical inputs: fixed row orders,
percents at two decimals, counts in compact B/M notation above a million.
"""

from __future__ import annotations

import csv
import math
import sys
from collections import Counter
from typing import Iterable, Mapping, Sequence

from .metrics import CrossDatasetStats, PerDatasetStats


def balanced_accuracy(rows: Iterable[tuple], classes: Sequence | None = None) -> float:
    """Unweighted mean of per-class recall over (example_id, gold, pred) rows.

    Classes default to those present in the gold column; passing an explicit
    class list makes a class without gold examples an error.
    """
    gold_counts: Counter = Counter()
    hits: Counter = Counter()
    n = 0
    for _, gold, pred in rows:
        n += 1
        gold_counts[gold] += 1
        if pred == gold:
            hits[gold] += 1
    if n == 0:
        raise ValueError("no predictions")
    labels = list(classes) if classes is not None else sorted(gold_counts)
    recalls = []
    for c in labels:
        if gold_counts[c] == 0:
            raise ValueError(f"class {c!r} has no gold examples")
        recalls.append(hits[c] / gold_counts[c])
    return sum(recalls) / len(recalls)


def prediction_summary(rows: Sequence[tuple]) -> dict:
    """Balanced accuracy plus bookkeeping: n, classes, off-label predictions."""
    rows = list(rows)
    gold_labels = {g for _, g, _ in rows}
    unknown = sum(1 for _, _, p in rows if p not in gold_labels)
    return {
        "balanced_accuracy": balanced_accuracy(rows),
        "n": len(rows),
        "classes": sorted(str(g) for g in gold_labels),
        "unknown_predictions": unknown,
    }


def read_predictions(path) -> list[tuple]:
    """CSV with header example_id,gold,pred ("-" reads stdin); ids must be unique."""
    fh = sys.stdin if str(path) == "-" else open(path, encoding="utf-8", newline="")
    try:
        reader = csv.DictReader(fh)
        required = {"example_id", "gold", "pred"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected CSV header example_id,gold,pred")
        rows = []
        seen = set()
        for lineno, rec in enumerate(reader, start=2):
            eid = rec["example_id"]
            if eid in seen:
                raise ValueError(f"{path}: line {lineno}: duplicate example_id {eid!r}")
            seen.add(eid)
            rows.append((eid, rec["gold"], rec["pred"]))
        return rows
    finally:
        if fh is not sys.stdin:
            fh.close()


def aggregate_seeds(values: Iterable[float]) -> tuple[float, float | None]:
    """(mean, sample std); std is None with a single value."""
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("no values to aggregate")
    mean = sum(vals) / len(vals)
    if len(vals) < 2:
        return mean, None
    var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
    return mean, math.sqrt(var)


def format_count(n: int) -> str:
    if n >= 1_000_000_000:
        return f"{n / 1e9:.2f}B"
    if n >= 1_000_000:
        return f"{n / 1e6:.2f}M"
    return f"{n:,}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]], fmt: str) -> str:
    if fmt == "markdown":
        lines = [
            "| " + " | ".join(header) + " |",
            "| " + " | ".join("---" for _ in header) + " |",
        ]
        lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        lines = [",".join(header)]
        lines += [",".join(str(c) for c in row) for row in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def render_dataset_stats(
    stats: Mapping[str, PerDatasetStats], fmt: str = "markdown"
) -> str:
    """Per-dataset block: one column per corpus, fixed row order."""
    names = list(stats)
    rows = [
        ["Total words", *(format_count(stats[n].total_words) for n in names)],
        ["Types (unique words)", *(format_count(stats[n].types) for n in names)],
        ["Type-token ratio (%)", *(f"{stats[n].ttr:.2f}%" for n in names)],
        ["Unigram entropy (bits)", *(f"{stats[n].unigram_entropy:.2f}" for n in names)],
    ]
    return _table(["Feature", *names], rows, fmt)


def render_cross_stats(cross: CrossDatasetStats, fmt: str = "markdown") -> str:
    """The seven cross-dataset rows in their canonical order."""
    sim = "-" if cross.pct_sim_gt_80 is None else f"{cross.pct_sim_gt_80:.2f}%"
    rows = [
        ["Compression (<80%)", f"{cross.pct_compression_lt_80:.2f}%"],
        ["Exact match", f"{cross.pct_exact_match:.2f}%"],
        ["High lexical overlap", f"{cross.pct_high:.2f}%"],
        ["Medium lexical overlap", f"{cross.pct_medium:.2f}%"],
        ["Low lexical overlap", f"{cross.pct_low:.2f}%"],
        ["Exact mismatch", f"{cross.pct_exact_mismatch:.2f}%"],
        ["Semantic Sim (>80%)", sim],
    ]
    return _table(["Feature", "Value"], rows, fmt)


def render_budgets(budgets: Sequence, fmt: str = "csv") -> str:
    """Token budget manifest: setup, mt_tokens, native_tokens."""
    rows = [[b.setup, b.mt_tokens, b.native_tokens] for b in budgets]
    return _table(["setup", "mt_tokens", "native_tokens"], rows, fmt)
