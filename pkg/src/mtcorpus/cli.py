"""Command-line surface for the corpus pipeline.

Every subcommand reads declared inputs, writes declared outputs, and exits
0 on success, 1 on runtime failure (one-line diagnostic on stderr), 2 on
usage errors. Paths accept "-" for stdin/stdout where line-oriented.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bpe, clients, filters, metrics, outliers, probe, report
from .config import build_config
from .corpus import join_parallel, read_corpus, write_corpus

DEFAULT_PROMPT = (
    "Rewrite the text below for young readers: short sentences, common "
    "words, same facts, nothing added.\n\nText:\n<Insert Text Here>\n\n"
    "Simplified text:"
)


def _write_text(path, text: str) -> None:
    if str(path) == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _emit_json(obj, path) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _config_from(args) -> "build_config":
    overrides = {}
    for key in ("min_tokens", "max_tokens", "ratio_cap", "iqr_k", "vocab_size",
                "context", "endpoint", "cache_dir"):
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    return build_config(
        profile=getattr(args, "profile", None),
        config_path=getattr(args, "config", None),
        overrides=overrides,
    )


def _client_from(args) -> clients.TransformClient:
    cfg = _config_from(args)
    return clients.TransformClient(
        endpoint=cfg.endpoint,
        cache_dir=cfg.cache_dir,
        token=getattr(args, "token", None),
        batch_size=getattr(args, "batch_size", clients.DEFAULT_BATCH_SIZE),
        max_retries=getattr(args, "max_retries", clients.DEFAULT_MAX_RETRIES),
        concurrency=getattr(args, "concurrency", clients.DEFAULT_CONCURRENCY),
        timeout=getattr(args, "timeout", 60.0),
    )


# -- handlers ---------------------------------------------------------------


def cmd_stats(args) -> int:
    stats = metrics.per_dataset_stats(read_corpus(args.inp, args.format))
    _emit_json(
        {
            "total_words": stats.total_words,
            "types": stats.types,
            "ttr": stats.ttr,
            "unigram_entropy": stats.unigram_entropy,
        },
        args.out,
    )
    return 0


def _load_embeddings(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out[str(obj["id"])] = (obj["a"], obj["b"])
            except (json.JSONDecodeError, KeyError) as e:
                raise ValueError(f"{path}: line {lineno}: bad embedding record ({e})") from e
    return out


def cmd_compare(args) -> int:
    pairs, join_report = join_parallel(
        read_corpus(args.in_a, args.format), read_corpus(args.in_b, args.format)
    )
    if join_report.unmatched_a or join_report.unmatched_b:
        print(
            f"note: excluded unmatched ids: {len(join_report.unmatched_a)} from side a, "
            f"{len(join_report.unmatched_b)} from side b",
            file=sys.stderr,
        )
    embeddings = _load_embeddings(args.embeddings) if args.embeddings else None
    cross = metrics.cross_dataset_stats(pairs, embeddings)
    if args.records_out:
        parses_a = metrics.read_parses(args.parses_a) if args.parses_a else {}
        parses_b = metrics.read_parses(args.parses_b) if args.parses_b else {}
        records = []
        for pair in pairs:
            emb = (embeddings or {}).get(pair.pair_id)
            records.append(
                metrics.pair_metrics(
                    pair,
                    parses_a=parses_a.get(pair.pair_id, ()),
                    parses_b=parses_b.get(pair.pair_id, ()),
                    embedding_a=emb[0] if emb else None,
                    embedding_b=emb[1] if emb else None,
                )
            )
        fmt = "csv" if str(args.records_out).endswith(".csv") else "jsonl"
        metrics.write_metric_records(records, args.records_out, fmt)
    payload = {
        "n_pairs": cross.n_pairs,
        "pct_compression_lt_80": cross.pct_compression_lt_80,
        "pct_exact_match": cross.pct_exact_match,
        "pct_high": cross.pct_high,
        "pct_medium": cross.pct_medium,
        "pct_low": cross.pct_low,
        "pct_exact_mismatch": cross.pct_exact_mismatch,
        "pct_sim_gt_80": cross.pct_sim_gt_80,
        "unmatched_a": len(join_report.unmatched_a),
        "unmatched_b": len(join_report.unmatched_b),
    }
    _emit_json(payload, args.out)
    return 0


def cmd_outliers(args) -> int:
    records = metrics.read_metric_records(args.records)
    names = tuple(args.metrics.split(",")) if args.metrics else outliers.DEFAULT_METRICS
    cfg = _config_from(args)
    tagged, summary = outliers.tag_outliers(records, metrics=names, k=cfg.iqr_k)
    if args.apply:
        filtered = outliers.apply_figure2_policy(tagged, metrics=names)
        metrics.write_metric_records(filtered, args.apply, "jsonl")
        summary["kept_after_policy"] = len(filtered)
    _emit_json(summary, args.summary)
    return 0


def cmd_filter_pre(args) -> int:
    cfg = _config_from(args)
    bounds = filters.LengthBounds(cfg.min_tokens, cfg.max_tokens)
    kept, rep = filters.pre_mt_filter(read_corpus(args.inp, args.format), bounds)
    write_corpus(kept, args.out)
    if args.report:
        _emit_json(rep.to_dict(), args.report)
    print(f"kept {rep.kept}, dropped {rep.dropped}", file=sys.stderr)
    return 0


def cmd_translate(args) -> int:
    client = _client_from(args)
    sources = list(filters.segment_corpus(read_corpus(args.inp, args.format)))
    if args.src_out:
        filters.write_sentence_records(sources, args.src_out)
    request_items = [(f"{s.doc_id}␟{s.index}", s.text) for s in sources]
    translated = []
    if request_items:
        req = clients.TransformRequest(
            "translate", tuple(request_items), params={"pair": args.lang_pair}
        )
        got = dict(client.translate_batch(req))
        for s in sources:
            translated.append(
                filters.SentenceRecord(
                    s.doc_id, s.index, got[f"{s.doc_id}␟{s.index}"]
                )
            )
    filters.write_sentence_records(translated, args.out)
    return 0


def cmd_filter_post(args) -> int:
    cfg = _config_from(args)
    kept, rep = filters.post_mt_filter(
        filters.read_sentence_records(args.src),
        filters.read_sentence_records(args.tgt),
        ratio_cap=cfg.ratio_cap,
    )
    filters.write_sentence_records(kept, args.out)
    if args.report:
        _emit_json(rep.to_dict(), args.report)
    print(f"kept {rep.kept} docs, dropped {rep.dropped}", file=sys.stderr)
    return 0


def cmd_reconstruct(args) -> int:
    docs = filters.reconstruct_documents(filters.read_sentence_records(args.inp))
    write_corpus(docs, args.out)
    return 0


def cmd_simplify(args) -> int:
    client = _client_from(args)
    if args.prompt_file:
        with open(args.prompt_file, encoding="utf-8") as fh:
            template = fh.read()
    else:
        template = DEFAULT_PROMPT
    docs = list(read_corpus(args.inp, args.format))
    results = []
    if docs:
        req = clients.TransformRequest(
            "simplify", tuple((d.doc_id, d.text) for d in docs)
        )
        embedder = client.embedder() if args.embed_degenerate else None
        results = client.simplify_batch(req, template, embedder=embedder)
    by_id = {r.item_id: r for r in results}
    out_docs = []
    degenerate = 0
    for d in docs:
        r = by_id[d.doc_id]
        degenerate += r.degenerate
        meta = dict(d.meta)
        meta["degenerate"] = "true" if r.degenerate else "false"
        out_docs.append(d.__class__(d.doc_id, r.text, meta))
    write_corpus(out_docs, args.out)
    print(f"simplified {len(out_docs)} docs, {degenerate} flagged degenerate",
          file=sys.stderr)
    return 0


def cmd_tok_train(args) -> int:
    cfg = _config_from(args)
    model = bpe.train_bpe(read_corpus(args.inp, args.format), vocab_size=cfg.vocab_size)
    bpe.save_model(model, args.out_dir)
    print(f"trained vocab of {model.size} tokens (incl. specials) -> {args.out_dir}",
          file=sys.stderr)
    return 0


def cmd_tok_count(args) -> int:
    model = bpe.load_model(args.model)
    total = bpe.count_tokens(read_corpus(args.inp, args.format), model)
    _emit_json({"label": args.label, "tokens": total}, args.out)
    return 0


def cmd_pack(args) -> int:
    import numpy as np

    cfg = _config_from(args)
    model = bpe.load_model(args.model)
    token_lists = (bpe.encode(d.text, model) for d in read_corpus(args.inp, args.format))
    rows = list(bpe.pack_sequences(token_lists, model.pad_id, context=cfg.context))
    arr = np.asarray(rows, dtype=np.uint32).reshape(len(rows), cfg.context)
    np.save(args.out, arr)
    print(f"packed {arr.shape[0]} rows of {cfg.context} ids", file=sys.stderr)
    return 0


def cmd_probe(args) -> int:
    pairs = probe.load_pairs(args.pairs)
    client = _client_from(args)
    result = probe.evaluate(pairs, client.scorer(), length_normalize=args.length_normalize)
    _emit_json(result.to_dict(), args.out)
    if args.markdown:
        _write_text(args.markdown, probe.breakdown_report({args.name: result}))
    return 0


def cmd_balacc(args) -> int:
    classes = args.classes.split(",") if args.classes else None
    summaries = []
    for path in args.pred:
        rows = report.read_predictions(path)
        s = report.prediction_summary(rows)
        if classes:
            s["balanced_accuracy"] = report.balanced_accuracy(rows, classes)
        s["file"] = str(path)
        summaries.append(s)
    if len(summaries) == 1:
        _emit_json(summaries[0], args.out)
    else:
        mean, std = report.aggregate_seeds(s["balanced_accuracy"] for s in summaries)
        _emit_json({"per_seed": summaries, "mean": mean, "std": std}, args.out)
    return 0


def cmd_report(args) -> int:
    if args.kind == "dataset-stats":
        stats = {}
        for spec_item in args.stats:
            name, _, path = spec_item.partition("=")
            if not path:
                raise ValueError(f"--stats expects NAME=stats.json, got {spec_item!r}")
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
            stats[name] = metrics.PerDatasetStats(
                d["total_words"], d["types"], d["ttr"], d["unigram_entropy"]
            )
        _write_text(args.out, report.render_dataset_stats(stats, args.fmt))
    elif args.kind == "cross-stats":
        with open(args.cross, encoding="utf-8") as fh:
            d = json.load(fh)
        cross = metrics.CrossDatasetStats(
            d["n_pairs"], d["pct_compression_lt_80"], d["pct_exact_match"],
            d["pct_high"], d["pct_medium"], d["pct_low"], d["pct_exact_mismatch"],
            d.get("pct_sim_gt_80"),
        )
        _write_text(args.out, report.render_cross_stats(cross, args.fmt))
    elif args.kind == "budgets":
        with open(args.budgets, encoding="utf-8") as fh:
            rows = json.load(fh)
        budgets = [
            bpe.TokenBudget(r["setup"], r["mt_tokens"], r["native_tokens"]) for r in rows
        ]
        _write_text(args.out, report.render_budgets(budgets, args.fmt))
    elif args.kind == "probe":
        results = {}
        for spec_item in args.result:
            name, _, path = spec_item.partition("=")
            if not path:
                raise ValueError(f"--result expects NAME=result.json, got {spec_item!r}")
            with open(path, encoding="utf-8") as fh:
                results[name] = probe.result_from_dict(json.load(fh))
        _write_text(args.out, probe.breakdown_report(results, args.fmt))
    return 0


# -- parser -----------------------------------------------------------------


def _add_config_args(p) -> None:
    p.add_argument("--config", help="TOML config file (flat keys matching flags)")
    p.add_argument("--profile", choices=("id", "ta"), help="language profile")


def _add_client_args(p) -> None:
    p.add_argument("--endpoint", help="transform endpoint URL (env MTCORPUS_ENDPOINT wins)")
    p.add_argument("--cache-dir", dest="cache_dir", help="response cache root (env MTCORPUS_CACHE)")
    p.add_argument("--token", help="bearer token")
    p.add_argument("--batch-size", type=int, default=clients.DEFAULT_BATCH_SIZE)
    p.add_argument("--max-retries", type=int, default=clients.DEFAULT_MAX_RETRIES)
    p.add_argument("--concurrency", type=int, default=clients.DEFAULT_CONCURRENCY)
    p.add_argument("--timeout", type=float, default=60.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtcorpus",
        description="Corpus pipeline for machine-translated pretraining data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="per-dataset word statistics")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--format", choices=("jsonl", "text"), default="jsonl")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("compare", help="cross-dataset pair metrics")
    p.add_argument("--in-a", dest="in_a", required=True, help="natural/source corpus")
    p.add_argument("--in-b", dest="in_b", required=True, help="simplified/target corpus")
    p.add_argument("--format", choices=("jsonl", "text"), default="jsonl")
    p.add_argument("--embeddings", help="JSONL {id, a, b} vectors")
    p.add_argument("--parses-a", dest="parses_a")
    p.add_argument("--parses-b", dest="parses_b")
    p.add_argument("--records-out", dest="records_out", help=".jsonl or .csv of per-pair records")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("outliers", help="IQR-tag metric records")
    p.add_argument("--records", required=True, help="metric records JSONL")
    p.add_argument("--metrics", help="comma list (default split_diff,compression,depth_ratio)")
    p.add_argument("--iqr-k", dest="iqr_k", type=float)
    p.add_argument("--apply", help="write records surviving the clip/remove policy here")
    p.add_argument("--summary", default="-")
    _add_config_args(p)
    p.set_defaults(func=cmd_outliers)

    p = sub.add_parser("filter-pre", help="drop docs with out-of-bounds sentences")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--format", choices=("jsonl", "text"), default="jsonl")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--min-tokens", dest="min_tokens", type=int)
    p.add_argument("--max-tokens", dest="max_tokens", type=int)
    _add_config_args(p)
    p.set_defaults(func=cmd_filter_pre)

    p = sub.add_parser("translate", help="segment and translate documents")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--format", choices=("jsonl", "text"), default="jsonl")
    p.add_argument("--out", required=True, help="translated sentence records JSONL")
    p.add_argument("--src-out", dest="src_out", help="also write source sentence records")
    p.add_argument("--lang-pair", dest="lang_pair", default="en-id")
    _add_client_args(p)
    _add_config_args(p)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("filter-post", help="drop docs breaking the length-ratio cap")
    p.add_argument("--src", required=True, help="source sentence records")
    p.add_argument("--tgt", required=True, help="translated sentence records")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--ratio-cap", dest="ratio_cap", type=float)
    _add_config_args(p)
    p.set_defaults(func=cmd_filter_post)

    p = sub.add_parser("reconstruct", help="reassemble sentences into documents")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("simplify", help="LLM-simplify documents")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--format", choices=("jsonl", "text"), default="jsonl")
    p.add_argument("--out", required=True)
    p.add_argument("--prompt-file", dest="prompt_file")
    p.add_argument("--embed-degenerate", dest="embed_degenerate", action="store_true",
                   help="also flag degenerate outputs by embedding cosine")
    _add_client_args(p)
    _add_config_args(p)
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("tok-train", help="train a byte-level BPE vocabulary")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--format", choices=("jsonl", "text"), default="jsonl")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--vocab-size", dest="vocab_size", type=int)
    _add_config_args(p)
    p.set_defaults(func=cmd_tok_train)

    p = sub.add_parser("tok-count", help="token budget under a fixed vocabulary")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--format", choices=("jsonl", "text"), default="jsonl")
    p.add_argument("--model", required=True, help="vocabulary directory")
    p.add_argument("--label", default="corpus")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_tok_count)

    p = sub.add_parser("pack", help="pack encoded docs into fixed-length rows")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--format", choices=("jsonl", "text"), default="jsonl")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help=".npy of uint32 rows")
    p.add_argument("--context", type=int)
    _add_config_args(p)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("probe", help="minimal-pair zero-shot evaluation")
    p.add_argument("--pairs", required=True, help="JSONL {id, good, bad, phenomenon}")
    p.add_argument("--out", default="-")
    p.add_argument("--markdown", help="also write a breakdown table")
    p.add_argument("--name", default="model", help="row label for the table")
    p.add_argument("--length-normalize", dest="length_normalize", action="store_true")
    _add_client_args(p)
    _add_config_args(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("balacc", help="balanced accuracy over prediction files")
    p.add_argument("--pred", nargs="+", required=True, help="CSV example_id,gold,pred; several files aggregate as seeds")
    p.add_argument("--classes", help="comma list; classes without gold examples error")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_balacc)

    p = sub.add_parser("report", help="render deterministic tables")
    p.add_argument("--kind", required=True,
                   choices=("dataset-stats", "cross-stats", "budgets", "probe"))
    p.add_argument("--fmt", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--stats", nargs="*", default=[], help="NAME=stats.json")
    p.add_argument("--cross", help="compare output JSON")
    p.add_argument("--budgets", help="JSON list of {setup, mt_tokens, native_tokens}")
    p.add_argument("--result", nargs="*", default=[], help="NAME=probe-result.json")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_report)

    return parser


def run_subcommand(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return run_subcommand(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
