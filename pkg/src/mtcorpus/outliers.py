"""IQR-based outlier tagging over metric distributions.

Bounds are Q1 - k·IQR and Q3 + k·IQR with k defaulting to 3 (wider than
the textbook 1.5 so tagging stays conservative). Values strictly outside
the bounds are flagged; boundary values are kept. The distribution-plot
policy clips Flesch scores into [0, 100] and removes records flagged on
split difference, compression, or depth ratio.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .corpus import MetricRecord
from .metrics import clip_fre

DEFAULT_METRICS = ("split_diff", "compression", "depth_ratio")
DEFAULT_K = 3.0


@dataclass(frozen=True)
class IqrBounds:
    q1: float
    q3: float
    k: float = DEFAULT_K

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    @property
    def lower(self) -> float:
        return self.q1 - self.k * self.iqr

    @property
    def upper(self) -> float:
        return self.q3 + self.k * self.iqr

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _interpolate(sorted_vals: Sequence[float], p: float) -> float:
    # linear interpolation between order statistics at rank (n-1)*p
    h = (len(sorted_vals) - 1) * p
    lo = int(h)
    frac = h - lo
    if frac == 0.0:
        return sorted_vals[lo]
    return sorted_vals[lo] + frac * (sorted_vals[lo + 1] - sorted_vals[lo])


def quartiles(values: Sequence[float]) -> tuple[float, float, float]:
    """(q1, median, q3) by linear interpolation on the sorted sample."""
    vals = sorted(float(v) for v in values)
    if not vals:
        raise ValueError("quartiles of an empty sample")
    if any(math.isnan(v) for v in vals):
        raise ValueError("sample contains NaN")
    return _interpolate(vals, 0.25), _interpolate(vals, 0.5), _interpolate(vals, 0.75)


def iqr_bounds(values: Sequence[float], k: float = DEFAULT_K) -> IqrBounds:
    q1, _, q3 = quartiles(values)
    return IqrBounds(q1=q1, q3=q3, k=k)


def tag_outliers(
    records: Iterable[MetricRecord],
    metrics: Sequence[str] = DEFAULT_METRICS,
    k: float = DEFAULT_K,
) -> tuple[list[MetricRecord], dict]:
    """Two passes: fit per-metric bounds, then flag records strictly outside.

    Records missing a metric are skipped for it and counted in the summary.
    Returns (new records with outlier_flags set, summary dict as emitted to
    JSON: {metric: {lower, upper, pct_flagged, n_missing}, union_pct}).
    """
    records = list(records)
    bounds: dict[str, IqrBounds] = {}
    missing: Counter = Counter()
    for m in metrics:
        vals = []
        for r in records:
            v = getattr(r, m)
            if v is None:
                missing[m] += 1
            else:
                vals.append(float(v))
        if vals:
            bounds[m] = iqr_bounds(vals, k=k)

    tagged: list[MetricRecord] = []
    flagged: Counter = Counter()
    union = 0
    metric_set = frozenset(metrics)
    for r in records:
        flags = set(r.outlier_flags)
        for m, b in bounds.items():
            v = getattr(r, m)
            if v is not None and not b.contains(float(v)):
                flags.add(m)
                flagged[m] += 1
        if flags & metric_set:
            union += 1
        tagged.append(replace(r, outlier_flags=frozenset(flags)))

    n = len(records)
    summary: dict = {}
    for m in metrics:
        b = bounds.get(m)
        summary[m] = {
            "lower": b.lower if b else None,
            "upper": b.upper if b else None,
            "pct_flagged": (100.0 * flagged[m] / n) if n else 0.0,
            "n_missing": missing[m],
        }
    summary["union_pct"] = (100.0 * union / n) if n else 0.0
    return tagged, summary


def apply_figure2_policy(
    records: Iterable[MetricRecord],
    metrics: Sequence[str] = DEFAULT_METRICS,
) -> list[MetricRecord]:
    """Clip Flesch scores into [0, 100]; drop records flagged on any removal metric.

    Idempotent: clipping is a projection and dropped records stay dropped.
    """
    metric_set = frozenset(metrics)
    out = []
    for r in records:
        if r.outlier_flags & metric_set:
            continue
        out.append(replace(r, fre_a=clip_fre(r.fre_a), fre_b=clip_fre(r.fre_b)))
    return out


def summary_to_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True)
