import json

import pytest

from lexdistill.cli import main
from lexdistill.report import render_metric_figures, write_metrics_tsv


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """synth -> index -> retrieve -> pipeline -> eval, all through the CLI."""
    ws = tmp_path_factory.mktemp("cli")
    spec = {"num_docs": 150, "vocab_size": 1500, "num_topics": 3,
            "num_queries": 6, "mismatch_rate": 0.5, "seed": 3}
    spec_path = ws / "spec.json"
    spec_path.write_text(json.dumps(spec))
    assert main(["synth", str(spec_path), str(ws / "data")]) == 0
    assert main(["index", str(ws / "data" / "corpus.jsonl"),
                 str(ws / "idx")]) == 0
    return ws


def test_retrieve_writes_run(workspace):
    out = workspace / "bm25.run"
    assert main(["retrieve", "--index-dir", str(workspace / "idx"),
                 "--queries", str(workspace / "data" / "queries.tsv"),
                 "--k", "50", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines and lines[0].split()[1] == "Q0"


@pytest.mark.parametrize("method", ["none", "odis", "rm3", "bo1"])
def test_pipeline_methods(workspace, method):
    out = workspace / f"{method}.run"
    diag = workspace / f"diag_{method}"
    assert main(["pipeline",
                 "--index-dir", str(workspace / "idx"),
                 "--corpus", str(workspace / "data" / "corpus.jsonl"),
                 "--queries", str(workspace / "data" / "queries.tsv"),
                 "--output", str(out),
                 "--method", method,
                 "--teacher", "hidden-linear",
                 "--teacher-weights", str(workspace / "data" / "teacher.json"),
                 "--budget", "100", "--first-stage", "50",
                 "--fb-terms", "20", "--lambda", "0.5", "--seed", "1",
                 "--diagnostics-dir", str(diag)]) == 0
    assert out.exists()
    diags = sorted(diag.glob("*.json"))
    assert len(diags) == 6
    payload = json.loads(diags[0].read_text())
    assert payload["method"] == method
    if method == "odis":
        assert len(payload["student"]["terms"]) <= 20


def test_pipeline_qrels_oracle_teacher(workspace):
    out = workspace / "oracle.run"
    assert main(["pipeline",
                 "--index-dir", str(workspace / "idx"),
                 "--corpus", str(workspace / "data" / "corpus.jsonl"),
                 "--queries", str(workspace / "data" / "queries.tsv"),
                 "--output", str(out),
                 "--method", "none",
                 "--teacher", "qrels-oracle",
                 "--qrels", str(workspace / "data" / "qrels.txt"),
                 "--budget", "100", "--first-stage", "50"]) == 0
    assert out.exists()


def test_config_file_with_flag_override(workspace, tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({
        "method": "none", "first_stage_k": 30, "total_budget": 60,
        "output_depth": 60, "lam": 0.4,
        "train": {"max_epochs": 100}, "prf": {"fb_terms": 10}}))
    out = tmp_path / "cfg.run"
    assert main(["pipeline",
                 "--index-dir", str(workspace / "idx"),
                 "--corpus", str(workspace / "data" / "corpus.jsonl"),
                 "--queries", str(workspace / "data" / "queries.tsv"),
                 "--output", str(out),
                 "--config", str(config),
                 "--teacher", "hidden-linear",
                 "--teacher-weights", str(workspace / "data" / "teacher.json"),
                 "--method", "rm3"]) == 0  # flag beats config
    assert out.exists()


def test_eval_with_report_dir(workspace, capsys):
    run = workspace / "odis.run"
    report_dir = workspace / "report"
    assert main(["eval", str(run), str(workspace / "data" / "qrels.txt"),
                 "--k", "100", "--first-stage", str(workspace / "bm25.run"),
                 "--compare", str(workspace / "none.run"),
                 "--report-dir", str(report_dir),
                 "--json-out", str(workspace / "metrics.json")]) == 0
    out = capsys.readouterr().out
    assert "mean" in out and "paired t-test" in out
    assert (report_dir / "metrics.tsv").exists()
    assert list(report_dir.glob("*.png"))
    metrics = json.loads((workspace / "metrics.json").read_text())
    assert "ndcg" in metrics


def test_report_helpers(tmp_path):
    report = {"ndcg": {"q1": 0.5, "q2": 0.75, "q3": None}}
    write_metrics_tsv(report, tmp_path / "m.tsv")
    body = (tmp_path / "m.tsv").read_text()
    assert "NA" in body and "0.625000" in body  # mean skips the None
    created = render_metric_figures(report, tmp_path)
    assert created and created[0].exists()
