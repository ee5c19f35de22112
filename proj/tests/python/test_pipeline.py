import json

import memejudge


def test_demo_runs_every_stage(demo_run):
    run_dir, results = demo_run
    names = [r["name"] for r in results]
    assert names[:6] == ["ingest", "debate", "judge", "train", "predict", "eval"]
    assert sum(n.startswith("ablate:") for n in names) == 10
    assert names[-1] == "score-explanations"
    assert not any(r["skipped"] for r in results)
    metrics = json.loads((run_dir / "eval" / "metrics.json").read_text())
    assert metrics["labeled"] > 0
    assert 0.0 <= metrics["metrics"]["macro_f1"] <= 1.0


def test_rerun_skips(demo_run):
    run_dir, _ = demo_run
    again = memejudge.run_stage(memejudge.demo_config(13), run_dir, "ablate", "wo_MD")
    assert again == [{"name": "ablate:wo_MD", "skipped": True, "outputs": ["ablate/wo_MD.json"]}]
    manifest = memejudge.manifest(memejudge.demo_config(13), run_dir)
    assert "ablate:wo_MD" in manifest["stages"]


def test_predictions_carry_matching_explanations(demo_run):
    run_dir, _ = demo_run
    rows = [json.loads(line) for line in (run_dir / "predict" / "predictions.jsonl").read_text().splitlines()]
    assert rows
    for row in rows:
        assert row["explanation"]["stance"] == row["label"]
