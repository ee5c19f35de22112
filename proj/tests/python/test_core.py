import pytest

import memejudge


def test_version():
    assert memejudge.__version__.count(".") == 2


def test_worked_example_metrics():
    r = memejudge.compute_metrics(["harmful", "harmful", "harmless", "harmless"],
                                  ["harmful", "harmless", "harmless", "harmless"])
    assert r["accuracy"] == pytest.approx(0.75)
    assert abs(r["macro_f1"] - 0.7333) < 1e-4
    assert r["n"] == 4


def test_metrics_reject_mismatch():
    with pytest.raises(memejudge.ValidationError):
        memejudge.compute_metrics(["harmful"], [])
    with pytest.raises(memejudge.ValidationError):
        memejudge.compute_metrics(["spicy"], ["harmful"])


def test_merge_labels():
    assert memejudge.merge_labels("very harmful") == "harmful"
    assert memejudge.merge_labels("not harmful") == "harmless"
    with pytest.raises(memejudge.Error):
        memejudge.merge_labels("toxic")


def test_parse_preference():
    assert memejudge.parse_preference("On balance, this meme is harmful.") == {"stance": "harmful",
                                                                              "status": "parsed"}
    assert memejudge.parse_preference("no idea")["status"] == "failed"
    assert memejudge.parse_preference("harmless or harmful?")["stance"] is None


def test_prompts():
    p = memejudge.debater_prompt("look at them", "harmful")
    assert "Text: [look at them]" in p
    assert p.endswith("reasoned as [harmful].")
    j = memejudge.judge_prompt("t", "benign", "hostile")
    assert j.index("(1) Harmless: [benign]") < j.index("(2) Harmful: [hostile]")


def test_config_errors_are_collected():
    with pytest.raises(memejudge.ConfigError) as e:
        memejudge.normalize_config({"train": {"batch_size": 0}, "gateway": {"backnd": "mock"}})
    msg = str(e.value)
    assert "train.batch_size" in msg
    assert "gateway.backnd" in msg


def test_demo_config_defaults():
    c = memejudge.normalize_config(memejudge.demo_config(5))
    assert c["seed"] == 5
    assert c["dataset"]["kind"] == "synthetic"
    assert c["gateway"]["backend"] == "mock"


def test_stage_before_upstream(tmp_path):
    with pytest.raises(memejudge.Error, match="requires corpus artifact"):
        memejudge.run_stage(memejudge.demo_config(), tmp_path, "debate")
    with pytest.raises(memejudge.ValidationError):
        memejudge.run_stage(memejudge.demo_config(), tmp_path, "deploy")
