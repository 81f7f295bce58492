import io
import json
import threading
import types
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from mtcorpus import metrics
from mtcorpus.cli import run_subcommand
from mtcorpus.corpus import Document, write_corpus
from mtcorpus.filters import read_sentence_records


class FakeTransformHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        if self.path != "/v1/transform":
            self.send_error(404)
            return
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length))
        items = []
        for item in payload["items"]:
            out = {"id": item["id"]}
            kind = payload["kind"]
            if kind in ("translate", "simplify"):
                out["text"] = item["text"]
            elif kind == "embed":
                out["vector"] = [1.0, 0.0, 0.0]
            elif kind == "logprob":
                out["logprob"] = -0.25 * len(item["text"]) - 0.5
            items.append(out)
        body = json.dumps({"items": items}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="module")
def endpoint():
    server = ThreadingHTTPServer(("127.0.0.1", 0), FakeTransformHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def corpus_file(tmp_path, docs, name="corpus.jsonl"):
    p = tmp_path / name
    write_corpus(docs, p)
    return p


DOCS = [
    Document("d1", "The sun rose early today. Farmers were already out."),
    Document("d2", "Rain arrived after lunch. Nobody minded much. Crops needed water."),
    Document("d3", "A quiet evening followed the storm."),
]


# ------------------------------------------------------------------- basics


def test_stats_to_stdout(tmp_path, capsys):
    p = corpus_file(tmp_path, DOCS)
    assert run_subcommand(["stats", "--in", str(p)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["total_words"] == sum(len(d.text.split()) for d in DOCS)
    assert 0 < payload["ttr"] <= 100


def test_stats_reads_stdin(tmp_path, capsys, monkeypatch):
    data = b'{"id": "x", "text": "five words are in here"}\n'
    monkeypatch.setattr("sys.stdin", types.SimpleNamespace(buffer=io.BytesIO(data)))
    assert run_subcommand(["stats", "--in", "-"]) == 0
    assert json.loads(capsys.readouterr().out)["total_words"] == 5


def test_reconstruct_pipes_stdin_to_stdout(capsys, monkeypatch):
    records = [
        {"doc_id": "d", "index": 0, "text": "First bit."},
        {"doc_id": "d", "index": 1, "text": "Second bit."},
    ]
    data = "".join(json.dumps(r) + "\n" for r in records).encode()
    monkeypatch.setattr("sys.stdin", io.TextIOWrapper(io.BytesIO(data), encoding="utf-8"))
    assert run_subcommand(["reconstruct", "--in", "-", "--out", "-"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out == {"id": "d", "text": "First bit. Second bit.", "meta": {}}


def test_unknown_flag_is_usage_error(tmp_path, capsys):
    assert run_subcommand(["stats", "--nope"]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert run_subcommand(["frobnicate"]) == 2


def test_runtime_failure_is_exit_one(tmp_path, capsys):
    assert run_subcommand(["stats", "--in", str(tmp_path / "missing.jsonl")]) == 1
    assert "error:" in capsys.readouterr().err


# ------------------------------------------------------------------ filters


def test_filter_pre_profile_ta(tmp_path, capsys):
    long_sentence = " ".join(f"w{i}" for i in range(151)).capitalize() + "."
    docs = [
        Document("ok", "Four tokens right here. Another sentence with five words."),
        Document("long", long_sentence),
    ]
    p = corpus_file(tmp_path, docs)
    out = tmp_path / "kept.jsonl"
    rep = tmp_path / "report.json"
    code = run_subcommand(
        ["filter-pre", "--profile", "ta", "--in", str(p), "--out", str(out),
         "--report", str(rep)]
    )
    assert code == 0
    kept_ids = [json.loads(l)["id"] for l in out.read_text().splitlines()]
    assert kept_ids == ["ok"]
    report = json.loads(rep.read_text())
    assert report["dropped"] == 1
    assert report["reasons"] == {"too_long": 1}


def test_filter_pre_flag_beats_config(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('min-tokens = 5\nmax-tokens = 10\n', encoding="utf-8")
    docs = [Document("tiny", "Nice day today honestly.")]  # 4 tokens
    p = corpus_file(tmp_path, docs)
    out = tmp_path / "kept.jsonl"
    # config alone drops the doc
    run_subcommand(["filter-pre", "--in", str(p), "--out", str(out), "--config", str(cfg)])
    assert out.read_text() == ""
    # explicit flag overrides the config file
    run_subcommand(
        ["filter-pre", "--in", str(p), "--out", str(out), "--config", str(cfg),
         "--min-tokens", "2"]
    )
    assert len(out.read_text().splitlines()) == 1


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text("mystery = 1\n", encoding="utf-8")
    p = corpus_file(tmp_path, DOCS)
    assert run_subcommand(
        ["filter-pre", "--in", str(p), "--out", str(tmp_path / "o"), "--config", str(cfg)]
    ) == 1
    assert "mystery" in capsys.readouterr().err


# ------------------------------------------------- translate through HTTP


def test_translate_filter_post_reconstruct_identity(tmp_path, endpoint):
    p = corpus_file(tmp_path, DOCS)
    src = tmp_path / "src.jsonl"
    tgt = tmp_path / "tgt.jsonl"
    assert run_subcommand(
        ["translate", "--in", str(p), "--out", str(tgt), "--src-out", str(src),
         "--endpoint", endpoint]
    ) == 0
    assert read_sentence_records(src) == read_sentence_records(tgt)  # echo endpoint

    kept = tmp_path / "kept.jsonl"
    assert run_subcommand(
        ["filter-post", "--src", str(src), "--tgt", str(tgt), "--out", str(kept)]
    ) == 0
    rebuilt = tmp_path / "rebuilt.jsonl"
    assert run_subcommand(["reconstruct", "--in", str(kept), "--out", str(rebuilt)]) == 0
    rebuilt_docs = {json.loads(l)["id"]: json.loads(l)["text"] for l in rebuilt.read_text().splitlines()}
    for doc in DOCS:
        assert rebuilt_docs[doc.doc_id].split() == doc.text.split()


def test_translate_env_endpoint(tmp_path, endpoint, monkeypatch):
    monkeypatch.setenv("MTCORPUS_ENDPOINT", endpoint)
    p = corpus_file(tmp_path, [DOCS[0]])
    tgt = tmp_path / "tgt.jsonl"
    assert run_subcommand(["translate", "--in", str(p), "--out", str(tgt)]) == 0
    assert len(read_sentence_records(tgt)) == 2


def test_simplify_cli(tmp_path, endpoint):
    p = corpus_file(tmp_path, [Document("a", "A plain sentence to simplify.")])
    out = tmp_path / "simple.jsonl"
    assert run_subcommand(
        ["simplify", "--in", str(p), "--out", str(out), "--endpoint", endpoint]
    ) == 0
    [line] = out.read_text().splitlines()
    rec = json.loads(line)
    assert rec["meta"]["degenerate"] == "false"
    assert "A plain sentence to simplify." in rec["text"]  # echo returns the prompt


def test_probe_cli(tmp_path, endpoint):
    rows = [
        {"id": "1", "good": "ok", "bad": "not okay", "phenomenon": "NPIs"},
        {"id": "2", "good": "fine", "bad": "unacceptable", "phenomenon": "morphology"},
    ]
    pairs = tmp_path / "pairs.jsonl"
    pairs.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
    out = tmp_path / "result.json"
    md = tmp_path / "table.md"
    code = run_subcommand(
        ["probe", "--pairs", str(pairs), "--out", str(out), "--markdown", str(md),
         "--endpoint", endpoint, "--name", "tiny"]
    )
    assert code == 0
    result = json.loads(out.read_text())
    # fake scorer favours shorter sentences; all good members are shorter
    assert result["micro_accuracy"] == 100.0
    assert result["tie_count"] == 0
    assert md.read_text().startswith("| Model |")


# ------------------------------------------------------------- tokenization


def test_tok_train_count_pack(tmp_path, capsys):
    docs = [Document(f"d{i}", "text sample with repetition. " * 5) for i in range(4)]
    p = corpus_file(tmp_path, docs)
    model_dir = tmp_path / "vocab"
    assert run_subcommand(
        ["tok-train", "--in", str(p), "--out-dir", str(model_dir), "--vocab-size", "280"]
    ) == 0
    assert (model_dir / "merges.txt").exists()
    assert (model_dir / "vocab.json").exists()

    out = tmp_path / "count.json"
    assert run_subcommand(
        ["tok-count", "--in", str(p), "--model", str(model_dir), "--label", "demo",
         "--out", str(out)]
    ) == 0
    payload = json.loads(out.read_text())
    assert payload["label"] == "demo"
    assert payload["tokens"] > 0

    rows = tmp_path / "rows.npy"
    assert run_subcommand(
        ["pack", "--in", str(p), "--model", str(model_dir), "--out", str(rows),
         "--context", "64"]
    ) == 0
    arr = np.load(rows)
    assert arr.dtype == np.uint32
    assert arr.ndim == 2 and arr.shape[1] == 64


# ----------------------------------------------------------------- outliers


def test_outliers_cli(tmp_path):
    from mtcorpus.corpus import MetricRecord

    records = [
        MetricRecord(f"r{i}", 50.0, -3.0, 1.0, 0, 0.5, 0.5, 1.0) for i in range(40)
    ]
    records.append(MetricRecord("spike", 50.0, 60.0, 80.0, 0, 0.5, 0.5, 1.0))
    rec_path = tmp_path / "records.jsonl"
    metrics.write_metric_records(records, rec_path)
    summary_path = tmp_path / "summary.json"
    filtered_path = tmp_path / "filtered.jsonl"
    code = run_subcommand(
        ["outliers", "--records", str(rec_path), "--summary", str(summary_path),
         "--apply", str(filtered_path)]
    )
    assert code == 0
    summary = json.loads(summary_path.read_text())
    assert summary["compression"]["pct_flagged"] == pytest.approx(100 / 41)
    kept = metrics.read_metric_records(filtered_path)
    assert len(kept) == 40
    assert all(r.fre_b == 0.0 for r in kept)  # clipped from -3
    assert summary["kept_after_policy"] == 40


# ------------------------------------------------------------------- balacc


def test_balacc_single_file(tmp_path, capsys):
    p = tmp_path / "preds.csv"
    p.write_text("example_id,gold,pred\n1,a,a\n2,a,a\n3,b,a\n4,b,b\n", encoding="utf-8")
    assert run_subcommand(["balacc", "--pred", str(p)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["balanced_accuracy"] == 0.75


def test_balacc_multiple_seeds(tmp_path, capsys):
    paths = []
    for seed, rows in enumerate(("1,a,a\n2,b,b\n", "1,a,a\n2,b,a\n", "1,a,a\n2,b,b\n")):
        p = tmp_path / f"seed{seed}.csv"
        p.write_text("example_id,gold,pred\n" + rows, encoding="utf-8")
        paths.append(str(p))
    assert run_subcommand(["balacc", "--pred", *paths]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["mean"] == pytest.approx((1.0 + 0.5 + 1.0) / 3)
    assert payload["std"] > 0


# ------------------------------------------------------------------- report


def test_report_cross_stats_deterministic(tmp_path):
    cross = {
        "n_pairs": 50, "pct_compression_lt_80": 27.52, "pct_exact_match": 2.02,
        "pct_high": 3.75, "pct_medium": 32.08, "pct_low": 60.77,
        "pct_exact_mismatch": 1.38, "pct_sim_gt_80": 77.78,
    }
    src = tmp_path / "cross.json"
    src.write_text(json.dumps(cross), encoding="utf-8")
    outputs = []
    for name in ("one.md", "two.md"):
        out = tmp_path / name
        assert run_subcommand(
            ["report", "--kind", "cross-stats", "--cross", str(src), "--out", str(out)]
        ) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    assert b"27.52%" in outputs[0]


def test_report_budgets(tmp_path, capsys):
    src = tmp_path / "budgets.json"
    src.write_text(
        json.dumps([
            {"setup": "Native", "mt_tokens": 0, "native_tokens": 4_300_000_000},
            {"setup": "Natural-MT", "mt_tokens": 2_900_000_000, "native_tokens": 0},
        ]),
        encoding="utf-8",
    )
    assert run_subcommand(
        ["report", "--kind", "budgets", "--budgets", str(src), "--fmt", "csv"]
    ) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "setup,mt_tokens,native_tokens"
    assert "Natural-MT,2900000000,0" in out


def test_compare_cli_with_records(tmp_path, capsys):
    natural = [Document("a", "The cat sat on the mat."), Document("b", "It rained all day.")]
    simplified = [Document("a", "The cat sat on the mat."), Document("b", "Rain fell.")]
    pa = corpus_file(tmp_path, natural, "nat.jsonl")
    pb = corpus_file(tmp_path, simplified, "simp.jsonl")
    records_out = tmp_path / "records.jsonl"
    assert run_subcommand(
        ["compare", "--in-a", str(pa), "--in-b", str(pb),
         "--records-out", str(records_out)]
    ) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_pairs"] == 2
    assert payload["pct_exact_match"] == 50.0
    records = metrics.read_metric_records(records_out)
    assert {r.pair_id for r in records} == {"a", "b"}
