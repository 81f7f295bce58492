"""Zero-shot minimal-pair probing with per-phenomenon breakdown.

A pair is scored correct when the grammatical member gets the strictly
higher total log-probability; equal scores count as incorrect and are
tallied as ties. Accuracy is reported per phenomenon plus two overall
figures: micro (item-weighted) and macro (mean over phenomena).
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .textunits import word_tokenize


class ProbeError(RuntimeError):
    def __init__(self, message: str, pair_ids: Iterable[str] = ()):
        super().__init__(message)
        self.pair_ids = list(pair_ids)


@dataclass(frozen=True)
class MinimalPair:
    pair_id: str
    grammatical: str
    ungrammatical: str
    phenomenon: str
    lang: str = ""

    def __post_init__(self):
        if self.grammatical == self.ungrammatical:
            raise ValueError(f"degenerate pair {self.pair_id!r}: members are identical")
        if not self.phenomenon:
            raise ValueError(f"pair {self.pair_id!r} has an empty phenomenon tag")


@dataclass(frozen=True)
class PhenomenonScore:
    n: int
    correct: int
    ties: int

    @property
    def accuracy(self) -> float:
        """Percent correct within the phenomenon."""
        return 100.0 * self.correct / self.n


@dataclass(frozen=True)
class ProbeResult:
    by_phenomenon: dict
    tie_count: int

    @property
    def n(self) -> int:
        return sum(s.n for s in self.by_phenomenon.values())

    @property
    def correct(self) -> int:
        return sum(s.correct for s in self.by_phenomenon.values())

    @property
    def micro_accuracy(self) -> float:
        return 100.0 * self.correct / self.n

    @property
    def macro_accuracy(self) -> float:
        scores = [s.accuracy for s in self.by_phenomenon.values() if s.n > 0]
        return sum(scores) / len(scores)

    def to_dict(self) -> dict:
        return {
            "by_phenomenon": {
                ph: {"n": s.n, "correct": s.correct, "ties": s.ties, "accuracy": s.accuracy}
                for ph, s in sorted(self.by_phenomenon.items())
            },
            "micro_accuracy": self.micro_accuracy,
            "macro_accuracy": self.macro_accuracy,
            "tie_count": self.tie_count,
            "n": self.n,
            "correct": self.correct,
        }


def result_from_dict(d: Mapping) -> ProbeResult:
    by_ph = {
        ph: PhenomenonScore(v["n"], v["correct"], v.get("ties", 0))
        for ph, v in d["by_phenomenon"].items()
    }
    return ProbeResult(by_phenomenon=by_ph, tie_count=d.get("tie_count", 0))


def load_pairs(path) -> list[MinimalPair]:
    """JSONL with fields {id, good, bad, phenomenon[, lang]}; duplicate ids rejected."""
    from .corpus import open_text_in

    pairs: list[MinimalPair] = []
    seen: set = set()
    fh, close = open_text_in(path)
    try:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ProbeError(f"{path}: line {lineno}: malformed JSON ({e.msg})") from e
            for key in ("id", "good", "bad", "phenomenon"):
                if key not in obj:
                    raise ProbeError(f"{path}: line {lineno}: missing {key!r} field")
            pid = str(obj["id"])
            if pid in seen:
                raise ProbeError(f"{path}: line {lineno}: duplicate pair id {pid!r}")
            seen.add(pid)
            try:
                pairs.append(
                    MinimalPair(pid, obj["good"], obj["bad"], obj["phenomenon"],
                                obj.get("lang", ""))
                )
            except ValueError as e:
                raise ProbeError(f"{path}: line {lineno}: {e}") from e
    finally:
        if close:
            fh.close()
    return pairs


def evaluate(
    pairs: Iterable[MinimalPair],
    scorer: Callable[[Sequence[str]], Sequence[float]],
    length_normalize: bool = False,
) -> ProbeResult:
    """Score both members of every pair and fold into per-phenomenon tallies.

    scorer maps a list of sentences to a list of total log-probabilities.
    length_normalize (off by default) divides each score by its word count
    before comparing. Correctness uses strict >, so argmax is invariant
    under any strictly increasing transform of the scores.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no pairs to evaluate")
    sentences: list[str] = []
    for p in pairs:
        sentences.append(p.grammatical)
        sentences.append(p.ungrammatical)
    try:
        scores = list(scorer(sentences))
    except Exception as e:
        raise ProbeError(
            f"scoring failed: {e}", pair_ids=[p.pair_id for p in pairs]
        ) from e
    if len(scores) != len(sentences):
        raise ProbeError(
            f"scorer returned {len(scores)} scores for {len(sentences)} sentences",
            pair_ids=[p.pair_id for p in pairs],
        )
    tallies: dict = defaultdict(lambda: [0, 0, 0])  # n, correct, ties
    tie_count = 0
    for p, lp_good, lp_bad in zip(pairs, scores[0::2], scores[1::2]):
        if length_normalize:
            lp_good = lp_good / max(1, len(word_tokenize(p.grammatical)))
            lp_bad = lp_bad / max(1, len(word_tokenize(p.ungrammatical)))
        t = tallies[p.phenomenon]
        t[0] += 1
        if lp_good > lp_bad:
            t[1] += 1
        elif lp_good == lp_bad:
            t[2] += 1
            tie_count += 1
    by_ph = {ph: PhenomenonScore(*t) for ph, t in tallies.items()}
    return ProbeResult(by_phenomenon=by_ph, tie_count=tie_count)


def breakdown_report(
    results: Mapping[str, ProbeResult],
    fmt: str = "markdown",
    phenomena: Sequence[str] | None = None,
) -> str:
    """Accuracy table: one row per model, one column per phenomenon plus overall.

    Overall is micro (item-weighted); the macro figure lives in the JSON
    result. Column order defaults to the sorted union of phenomena.
    """
    if phenomena is None:
        seen: set = set()
        for r in results.values():
            seen.update(r.by_phenomenon)
        phenomena = sorted(seen)
    header = ["Model", *phenomena, "Overall"]
    rows = []
    for name in results:
        r = results[name]
        cells = [name]
        for ph in phenomena:
            s = r.by_phenomenon.get(ph)
            cells.append(f"{s.accuracy:.1f}" if s and s.n else "-")
        cells.append(f"{r.micro_accuracy:.1f}")
        rows.append(cells)
    if fmt == "markdown":
        lines = [
            "| " + " | ".join(header) + " |",
            "| " + " | ".join("---" for _ in header) + " |",
        ]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        lines = [",".join(header)]
        lines += [",".join(row) for row in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
