import json

import pytest

from prune_audit.cli import main
from prune_audit.engine import init_state, save_checkpoint
from prune_audit.harness import read_registry
from prune_audit.zoo import build_lenet5_mini

from conftest import DATA_CACHE, FIXTURE_DIR

MICRO_PLAN = """
[dataset]
name = synth
root = {root}
train_subset = 256

[model]
variant = W10D5

[pretrain]
epochs = 1
batch_size = 64
momentum = 0.9
weight_decay = 1e-4
lr_schedule = 0:0.01

[retrain]
epochs = 1
batch_size = 64
momentum = 0.9
weight_decay = 1e-4
lr_schedule = 0:0.005

[pruning]
ratios = [0, 0.2, 0]
mode = sample:3:5

[analysis]
repeats = 1
base_seed = 0
"""


@pytest.fixture()
def micro_plan_file(tmp_path):
    path = tmp_path / "plan.ini"
    path.write_text(MICRO_PLAN.format(root=DATA_CACHE / "data"))
    return path


def test_validation_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[dataset]\nname = synth\n")
    assert main(["pretrain", str(bad)]) == 2
    assert "missing" in capsys.readouterr().err


def test_runtime_failure_exits_3(tmp_path, capsys):
    garbage = tmp_path / "garbage.ckpt"
    garbage.write_bytes(b"not a checkpoint at all")
    assert main(["criteria", str(garbage)]) == 3


def test_pretrain_sweep_analyze_report_pipeline(micro_plan_file, tmp_path, capsys):
    workdir = tmp_path / "runs"
    assert main(["pretrain", str(micro_plan_file), "--workdir", str(workdir)]) == 0
    assert (workdir / "dense.ckpt").exists()

    assert main(["sweep", str(micro_plan_file), "--workdir", str(workdir)]) == 0
    registry = workdir / "registry.txt"
    assert len(read_registry(registry)) == 3

    out = tmp_path / "analysis"
    assert main(["analyze", str(registry), "--metric", "acc",
                 "--out", str(out), "--label", "Conv2", "--ratio", "0.2"]) == 0
    payload = json.loads((out / "analysis.json").read_text())
    assert payload["n"] == 3
    assert payload["verdict"] in ("valid", "invalid")
    assert (out / "scatter.svg").exists() and (out / "scatter.csv").exists()

    assert main(["report", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "Conv2" in text and "kendall" in text
    assert (tmp_path / "summary.csv").exists()


def test_analyze_accepts_plain_csv(tmp_path, capsys):
    out = tmp_path / "fixture-analysis"
    code = main(["analyze", str(FIXTURE_DIR / "vit_head_pruning_runs.csv"),
                 "--metric", "acc", "--out", str(out)])
    assert code == 0
    payload = json.loads((out / "analysis.json").read_text())
    assert payload["n"] == 10
    assert payload["tau"] == pytest.approx(0.16, abs=0.005)
    assert payload["counterexamples"] == 26
    assert payload["verdict"] == "invalid"


def test_criteria_emits_per_layer_csv(tmp_path, capsys):
    ckpt = tmp_path / "dense.ckpt"
    save_checkpoint(init_state(build_lenet5_mini(), seed=0), ckpt)
    out_file = tmp_path / "scores.csv"
    assert main(["criteria", str(ckpt), "--out", str(out_file)]) == 0
    lines = out_file.read_text().strip().splitlines()
    assert lines[0] == "layer_id,unit_id,score"
    assert len(lines) == 1 + 30          # three conv layers of width 10
    layer_ids = {int(l.split(",")[0]) for l in lines[1:]}
    assert layer_ids == {0, 1, 2}
    assert all(float(l.split(",")[2]) >= 0 for l in lines[1:])


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2
