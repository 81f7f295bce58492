#!/usr/bin/env python3
"""Synthesize a small paired corpus for pipeline demos.

Writes natural.jsonl / simplified.jsonl (parallel by id, with planted
length-bound and ratio violations plus a couple of degenerate
simplifications), and pairs.jsonl with BLiMP-style minimal pairs.
"""

import argparse
import json
import random
from pathlib import Path

NOUNS = ["river", "bridge", "farmer", "engine", "committee", "forest", "harbor", "signal"]
VERBS = ["carries", "watches", "repairs", "crosses", "records", "shelters", "powers"]
MODIFIERS = [
    "in the northern valley", "despite the heavy rain", "after several meetings",
    "with considerable effort", "under the old statute", "near the coastal road",
]


def sentence(rng, simple=False):
    n, v = rng.choice(NOUNS), rng.choice(VERBS)
    obj = rng.choice(NOUNS)
    if simple:
        return f"The {n} {v} the {obj}."
    mod = rng.choice(MODIFIERS)
    extra = f", which {rng.choice(VERBS)} the {rng.choice(NOUNS)}," if rng.random() < 0.4 else ""
    return f"The {n}{extra} {v} the {obj} {mod}."


def build(out_dir: Path, n_docs: int, seed: int) -> None:
    rng = random.Random(seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    natural, simplified = [], []
    for i in range(n_docs):
        doc_id = f"demo-{i:04d}"
        k = rng.randint(2, 5)
        nat = " ".join(sentence(rng) for _ in range(k))
        if rng.random() < 0.8:
            simp = " ".join(sentence(rng, simple=True) for _ in range(k + rng.randint(0, 2)))
        else:
            simp = nat  # exact matches, as real simplifiers sometimes refuse
        if i == 7:
            nat += " Too short."  # planted pre-MT violation
        if i == 11:
            simp = "(Note: Please provide your output in the requested format.)"
        natural.append({"id": doc_id, "text": nat, "meta": {"source": "demo"}})
        simplified.append({"id": doc_id, "text": simp, "meta": {"source": "demo"}})

    for name, rows in (("natural.jsonl", natural), ("simplified.jsonl", simplified)):
        with open(out_dir / name, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    pairs = []
    for i in range(40):
        n, v = rng.choice(NOUNS), rng.choice(VERBS)
        pairs.append(
            {
                "id": f"mp-{i}",
                "good": f"the {n} {v}",
                "bad": f"the {n} {v} {v}",
                "phenomenon": rng.choice(
                    ["NPIs", "argument structure", "filler-gap", "morphology"]
                ),
                "lang": "demo",
            }
        )
    with open(out_dir / "pairs.jsonl", "w", encoding="utf-8") as fh:
        for row in pairs:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"wrote {n_docs} paired docs and {len(pairs)} minimal pairs to {out_dir}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("demo-data"))
    parser.add_argument("--docs", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    build(args.out_dir, args.docs, args.seed)


if __name__ == "__main__":
    main()
