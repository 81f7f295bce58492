#!/usr/bin/env python3
"""End-to-end desk-scale pipeline run.

Drives the CLI through the whole flow on a synthetic paired corpus:
stats -> compare -> outliers -> filter-pre -> translate -> filter-post ->
reconstruct -> tok-train -> tok-count -> pack -> probe -> report.

Point --endpoint at a running shim (`mtcorpus-shim --port 8763`) to cross
real HTTP; without it, translation and scoring run against an in-process
echo fake so the demo needs no server.
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
from make_demo_corpus import build  # noqa: E402

from mtcorpus import clients, filters, probe  # noqa: E402
from mtcorpus.cli import run_subcommand  # noqa: E402
from mtcorpus.corpus import read_corpus  # noqa: E402


def run(args_list):
    code = run_subcommand([str(a) for a in args_list])
    if code != 0:
        raise SystemExit(f"step failed ({code}): {args_list}")


def fake_translate(work: Path, kept: Path, src_out: Path, tgt_out: Path) -> None:
    sources = list(filters.segment_corpus(read_corpus(kept)))
    filters.write_sentence_records(sources, src_out)

    def echo(payload):
        return {"items": [{"id": i["id"], "text": i["text"]} for i in payload["items"]]}

    client = clients.TransformClient(
        transport=echo, endpoint="fake://", cache_dir=work / "cache", backoff=0.0
    )
    request = clients.TransformRequest(
        "translate", tuple((f"{s.doc_id}#{s.index}", s.text) for s in sources)
    )
    got = dict(client.translate_batch(request))
    translated = [
        filters.SentenceRecord(s.doc_id, s.index, got[f"{s.doc_id}#{s.index}"])
        for s in sources
    ]
    filters.write_sentence_records(translated, tgt_out)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--work-dir", type=Path, default=Path("demo-run"))
    parser.add_argument("--docs", type=int, default=60)
    parser.add_argument("--endpoint", help="shim URL; omit to use in-process fakes")
    parser.add_argument("--profile", choices=("id", "ta"), default="id")
    args = parser.parse_args()

    work = args.work_dir
    data = work / "data"
    build(data, args.docs, seed=0)
    natural = data / "natural.jsonl"
    simplified = data / "simplified.jsonl"

    print("\n== per-dataset stats ==")
    run(["stats", "--in", natural, "--out", work / "stats-natural.json"])
    run(["stats", "--in", simplified, "--out", work / "stats-simplified.json"])
    print((work / "stats-natural.json").read_text().strip())

    print("\n== cross-dataset comparison ==")
    run([
        "compare", "--in-a", natural, "--in-b", simplified,
        "--records-out", work / "records.jsonl", "--out", work / "cross.json",
    ])
    print((work / "cross.json").read_text().strip())

    print("\n== outlier tagging + distribution policy ==")
    run([
        "outliers", "--records", work / "records.jsonl",
        "--summary", work / "outliers.json", "--apply", work / "records-clean.jsonl",
    ])
    print((work / "outliers.json").read_text().strip())

    print("\n== pre-MT filter ==")
    kept = work / "kept.jsonl"
    run([
        "filter-pre", "--profile", args.profile, "--in", natural, "--out", kept,
        "--report", work / "pre-report.json",
    ])
    print((work / "pre-report.json").read_text().strip())

    print("\n== translate ==")
    src_sents = work / "src-sents.jsonl"
    tgt_sents = work / "tgt-sents.jsonl"
    if args.endpoint:
        run([
            "translate", "--in", kept, "--out", tgt_sents, "--src-out", src_sents,
            "--endpoint", args.endpoint, "--cache-dir", work / "cache",
        ])
    else:
        fake_translate(work, kept, src_sents, tgt_sents)
    print(f"translated {sum(1 for _ in open(tgt_sents))} sentences")

    print("\n== post-MT filter + reconstruction ==")
    kept_sents = work / "kept-sents.jsonl"
    run([
        "filter-post", "--src", src_sents, "--tgt", tgt_sents, "--out", kept_sents,
        "--report", work / "post-report.json",
    ])
    rebuilt = work / "translated-docs.jsonl"
    run(["reconstruct", "--in", kept_sents, "--out", rebuilt])
    print((work / "post-report.json").read_text().strip())

    print("\n== tokenizer: train, count, pack ==")
    vocab_dir = work / "vocab"
    run(["tok-train", "--in", rebuilt, "--out-dir", vocab_dir, "--vocab-size", "300"])
    run([
        "tok-count", "--in", rebuilt, "--model", vocab_dir, "--label", "demo-mt",
        "--out", work / "budget.json",
    ])
    print((work / "budget.json").read_text().strip())
    run([
        "pack", "--in", rebuilt, "--model", vocab_dir, "--out", work / "rows.npy",
        "--context", "128",
    ])

    print("\n== zero-shot probe ==")
    result_path = work / "probe.json"
    if args.endpoint:
        run([
            "probe", "--pairs", data / "pairs.jsonl", "--out", result_path,
            "--markdown", work / "probe.md", "--endpoint", args.endpoint,
            "--name", "shim",
        ])
    else:
        pairs = probe.load_pairs(data / "pairs.jsonl")
        result = probe.evaluate(pairs, lambda ss: [-float(len(s)) for s in ss])
        result_path.write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True))
        (work / "probe.md").write_text(probe.breakdown_report({"length-fake": result}))
    print((work / "probe.md").read_text().strip())

    print("\nartifacts in", work)


if __name__ == "__main__":
    main()
