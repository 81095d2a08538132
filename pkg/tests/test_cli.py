import json

import pytest

from sphereid.cli import run

CONFIG_TEXT = """\
epochs = 2
seed = 21
fake_batch = 16
real_batch = 2
warmup_epochs = 1
hidden_dim = 16
embed_dim = 8
base_lr = 0.002
"""


@pytest.fixture()
def workspace(tmp_path):
    manifest = tmp_path / "d.manifest"
    config = tmp_path / "run.cfg"
    config.write_text(CONFIG_TEXT, encoding="utf-8")
    code = run(["synth-data", "--out", str(manifest), "--classes", "6",
                "--seed", "7", "--train-per-class", "12", "--test-per-class", "8",
                "--folds", "3"])
    assert code == 0
    return tmp_path, manifest, config


def test_synth_data_writes_manifest_and_sidecar(workspace):
    tmp_path, manifest, _ = workspace
    assert manifest.exists()
    meta = json.loads((tmp_path / "d.manifest.meta.json").read_text())
    assert meta["simulator"]["generator_count"] == 6
    folds = meta["fold_split"]["folds"]
    assert sorted(g for f in folds for g in f) == list(range(6))


def test_synth_data_idempotent(workspace, tmp_path):
    _, manifest, _ = workspace
    other = tmp_path / "again.manifest"
    code = run(["synth-data", "--out", str(other), "--classes", "6",
                "--seed", "7", "--train-per-class", "12", "--test-per-class", "8",
                "--folds", "3"])
    assert code == 0
    assert other.read_bytes() == manifest.read_bytes()


def test_full_pipeline_happy_path(workspace, capsys):
    tmp_path, manifest, config = workspace
    ckpt = tmp_path / "m.ckpt"
    code = run(["train", "--config", str(config), "--manifest", str(manifest),
                "--out", str(ckpt), "--fold", "0"])
    assert code == 0
    assert ckpt.exists()
    assert (tmp_path / "m.ckpt.report.json").exists()
    out = capsys.readouterr().out
    assert "epoch 1:" in out and "epoch 2:" in out

    detect_out = tmp_path / "detect.json"
    code = run(["eval-detect", "--checkpoint", str(ckpt), "--manifest", str(manifest),
                "--out", str(detect_out)])
    assert code == 0
    doc = json.loads(detect_out.read_text())
    assert doc["kind"] == "detect"
    assert set(doc) >= {"f_acc", "r_acc", "acc", "ap"}

    fewshot_out = tmp_path / "fewshot.json"
    code = run(["eval-fewshot", "--checkpoint", str(ckpt), "--manifest", str(manifest),
                "--way", "2", "--shot", "2", "--episodes", "5", "--seed", "3",
                "--query", "3", "--out", str(fewshot_out)])
    assert code == 0
    doc = json.loads(fewshot_out.read_text())
    assert doc["kind"] == "fewshot" and doc["way"] == 2 and doc["episodes"] == 5
    assert 0.0 <= doc["mean_acc"] <= 1.0

    code = run(["report", str(detect_out), str(fewshot_out)])
    assert code == 0
    table = capsys.readouterr().out
    assert "F-Acc" in table and "mean_acc" in table


def test_train_deterministic_checkpoints(workspace, tmp_path):
    _, manifest, config = workspace
    a = tmp_path / "a.ckpt"
    b = tmp_path / "b.ckpt"
    assert run(["train", "--config", str(config), "--manifest", str(manifest),
                "--out", str(a), "--fold", "1"]) == 0
    assert run(["train", "--config", str(config), "--manifest", str(manifest),
                "--out", str(b), "--fold", "1"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.ckpt.report.json").read_text().replace("a.ckpt", "X") \
        == (tmp_path / "b.ckpt.report.json").read_text().replace("b.ckpt", "X")


def test_robust_sweep_equals_individual_runs(workspace, tmp_path, capsys):
    _, manifest, config = workspace
    ckpt = tmp_path / "m.ckpt"
    assert run(["train", "--config", str(config), "--manifest", str(manifest),
                "--out", str(ckpt), "--fold", "0"]) == 0
    sweep_out = tmp_path / "sweep.json"
    assert run(["robust-sweep", "--checkpoint", str(ckpt), "--manifest", str(manifest),
                "--op", "quantize", "--values", "64,16,4", "--out", str(sweep_out)]) == 0
    sweep = json.loads(sweep_out.read_text())
    assert sweep["kind"] == "sweep" and len(sweep["results"]) == 3
    capsys.readouterr()
    for entry in sweep["results"]:
        single_out = tmp_path / f"single-{entry['value']:g}.json"
        assert run(["eval-detect", "--checkpoint", str(ckpt), "--manifest", str(manifest),
                    "--corrupt", f"quantize:{entry['value']:g}",
                    "--out", str(single_out)]) == 0
        single = json.loads(single_out.read_text())
        for key in ("f_acc", "r_acc", "acc", "ap"):
            assert single[key] == entry[key]


def test_usage_error_prints_help_and_exits_2(capsys):
    code = run(["train"])
    assert code == 2
    err = capsys.readouterr().err
    assert "--config" in err and "usage" in err.lower()


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) == 2


def test_domain_error_exits_1(workspace, tmp_path, capsys):
    _, manifest, config = workspace
    ckpt = tmp_path / "all.ckpt"
    # trained on every class: the unseen pool is empty
    assert run(["train", "--config", str(config), "--manifest", str(manifest),
                "--out", str(ckpt)]) == 0
    capsys.readouterr()
    code = run(["eval-detect", "--checkpoint", str(ckpt), "--manifest", str(manifest)])
    assert code == 1
    assert "--fakes all" in capsys.readouterr().err
    assert run(["eval-detect", "--checkpoint", str(ckpt), "--manifest", str(manifest),
                "--fakes", "all"]) == 0


def test_fold_and_exclude_mutually_exclusive(workspace, tmp_path, capsys):
    _, manifest, config = workspace
    code = run(["train", "--config", str(config), "--manifest", str(manifest),
                "--out", str(tmp_path / "x.ckpt"), "--fold", "0",
                "--exclude-classes", "1"])
    assert code == 1


def test_cli_does_not_mutate_inputs(workspace, tmp_path):
    _, manifest, config = workspace
    before = manifest.read_bytes()
    ckpt = tmp_path / "m2.ckpt"
    assert run(["train", "--config", str(config), "--manifest", str(manifest),
                "--out", str(ckpt), "--fold", "2"]) == 0
    assert run(["eval-detect", "--checkpoint", str(ckpt),
                "--manifest", str(manifest)]) == 0
    assert manifest.read_bytes() == before


def test_set_overrides_config_file(workspace, tmp_path, capsys):
    _, manifest, config = workspace
    ckpt = tmp_path / "o.ckpt"
    assert run(["train", "--config", str(config), "--manifest", str(manifest),
                "--out", str(ckpt), "--fold", "0", "--set", "epochs=1",
                "--set", "warmup_epochs=0"]) == 0
    report = json.loads((tmp_path / "o.ckpt.report.json").read_text())
    assert len(report["epochs"]) == 1
