import csv
import json

import pytest
from click.testing import CliRunner

from falcon.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Materialized fixture corpus plus pretrained/trained checkpoints."""
    root = tmp_path_factory.mktemp("cli")
    runner = CliRunner()

    res = runner.invoke(main, ["fixture", "--out-dir", str(root / "fx"),
                               "--docs", "30"])
    assert res.exit_code == 0, res.output

    cfg = root / "train.cfg"
    cfg.write_text(
        "hidden_size = 4\nlearning_rate = 0.005\nmax_epochs = 3\n"
        "batch_size = 16\nseed = 5\npatience = 5\n")

    res = runner.invoke(main, [
        "dataset", "split", "--in", str(root / "fx" / "labeled.jsonl"),
        "--out", str(root / "fx" / "labeled_split.jsonl"), "--seed", "0"])
    assert res.exit_code == 0, res.output

    res = runner.invoke(main, [
        "pretrain-tra", "--config", str(cfg),
        "--data", str(root / "fx" / "trajectories.jsonl"),
        "--out", str(root / "extractor.ckpt")])
    assert res.exit_code == 0, res.output

    res = runner.invoke(main, [
        "train", "--config", str(cfg),
        "--data", str(root / "fx" / "labeled_split.jsonl"),
        "--out", str(root / "model.ckpt"),
        "--frozen", str(root / "extractor.ckpt")])
    assert res.exit_code == 0, res.output
    return root


def test_ingest_command(workspace):
    runner = CliRunner()
    out = workspace / "candidates.jsonl"
    res = runner.invoke(main, [
        "ingest", "--docs", str(workspace / "fx" / "docs"),
        "--triples", str(workspace / "fx" / "triples.jsonl"),
        "--out", str(out)])
    assert res.exit_code == 0, res.output
    info = json.loads(res.output.strip().splitlines()[-1])
    assert info["candidates"] > 0
    assert out.exists()


def test_dataset_summarize(workspace):
    runner = CliRunner()
    res = runner.invoke(main, ["dataset", "summarize", "--in",
                               str(workspace / "fx" / "labeled.jsonl")])
    assert res.exit_code == 0, res.output
    summary = json.loads(res.output)
    assert summary["trajectory"]["total"] == 2 * summary["interaction"]["total"]


def test_predict_eval_and_extract(workspace):
    runner = CliRunner()
    out = workspace / "candidates.jsonl"
    runner.invoke(main, [
        "ingest", "--docs", str(workspace / "fx" / "docs"),
        "--triples", str(workspace / "fx" / "triples.jsonl"),
        "--out", str(out)])

    res = runner.invoke(main, [
        "predict", "--checkpoint", str(workspace / "model.ckpt"),
        "--candidates", str(out), "--out", str(workspace / "preds.jsonl")])
    assert res.exit_code == 0, res.output
    info = json.loads(res.output.strip().splitlines()[-1])
    assert info["candidates"] > 0 and info["skipped"] == 0

    res = runner.invoke(main, [
        "eval", "--checkpoint", str(workspace / "model.ckpt"),
        "--data", str(workspace / "fx" / "labeled_split.jsonl")])
    assert res.exit_code == 0, res.output
    report = json.loads(res.output)
    assert set(report["confusion"]) == {"tp", "fp", "fn", "tn"}

    res = runner.invoke(main, [
        "extract", "--triples", str(workspace / "fx" / "triples.jsonl"),
        "--checkpoint", str(workspace / "model.ckpt"),
        "--out", str(workspace / "records.jsonl"),
        "--summary", str(workspace / "extract_summary.json"),
        "--gazetteer", str(workspace / "fx" / "gazetteer.json")])
    assert res.exit_code == 0, res.output
    summary = json.loads(res.output.strip().splitlines()[-1])
    assert summary["positives"] + summary["negatives"] + summary["skipped"] \
        == summary["candidates"]


def test_classify_and_analyze_pipeline(workspace):
    runner = CliRunner()
    records = workspace / "records.jsonl"
    if not records.exists():
        test_predict_eval_and_extract(workspace)

    res = runner.invoke(main, [
        "classify-type", "--records", str(records),
        "--llm", f"fixture:{workspace / 'fx' / 'llm_responses.json'}",
        "--out", str(workspace / "typed.jsonl")])
    assert res.exit_code == 0, res.output
    info = json.loads(res.output.strip().splitlines()[-1])
    assert info["unclassified"] == 0
    assert sum(info["counts"].values()) == info["records"]

    res = runner.invoke(main, [
        "analyze", "trends", "--records", str(workspace / "typed.jsonl"),
        "--attrs", str(workspace / "fx" / "attrs.json"),
        "--out-csv", str(workspace / "trends.csv"),
        "--out-json", str(workspace / "totals.json")])
    assert res.exit_code == 0, res.output
    with open(workspace / "trends.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "bin"
    assert len(rows) > 1

    res = runner.invoke(main, [
        "analyze", "polarization", "--records", str(workspace / "typed.jsonl"),
        "--attrs", str(workspace / "fx" / "attrs.json"),
        "--null-samples", "50", "--seed", "3",
        "--out-csv", str(workspace / "polarization.csv")])
    assert res.exit_code == 0, res.output
    body = (workspace / "polarization.csv").read_text()
    assert body.splitlines()[0].startswith("year,")

    res = runner.invoke(main, [
        "analyze", "stats", "--records", str(workspace / "typed.jsonl"),
        "--attrs", str(workspace / "fx" / "attrs.json"),
        "--out-json", str(workspace / "stats.json")])
    assert res.exit_code == 0, res.output
    stats = json.loads((workspace / "stats.json").read_text())
    assert "clustering" in stats and "pagerank" in stats

    res = runner.invoke(main, [
        "analyze", "export", "--records", str(workspace / "typed.jsonl"),
        "--attrs", str(workspace / "fx" / "attrs.json"),
        "--out-edges", str(workspace / "edges.csv"),
        "--out-gexf", str(workspace / "graph.gexf")])
    assert res.exit_code == 0, res.output
    assert (workspace / "edges.csv").read_text().startswith("person1,person2,weight")
    assert "<gexf" in (workspace / "graph.gexf").read_text()

    res = runner.invoke(main, [
        "analyze", "distance", "--records", str(workspace / "typed.jsonl"),
        "--attrs", str(workspace / "fx" / "attrs.json"),
        "--out-csv", str(workspace / "distance.csv")])
    assert res.exit_code == 0, res.output
    info = json.loads(res.output.strip().splitlines()[-1])
    assert info["computed"] > 0


def test_ablate_command(workspace):
    runner = CliRunner()
    cfg = workspace / "ablate.cfg"
    cfg.write_text("hidden_size = 4\nlearning_rate = 0.005\nmax_epochs = 1\n"
                   "batch_size = 16\nseed = 2\n")
    res = runner.invoke(main, [
        "ablate", "--config", str(cfg),
        "--data", str(workspace / "fx" / "labeled_split.jsonl"),
        "--out-dir", str(workspace / "ablations"),
        "--frozen", str(workspace / "extractor.ckpt")])
    assert res.exit_code == 0, res.output
    table = (workspace / "ablations" / "ablations.csv").read_text()
    assert len(table.splitlines()) == 7
