import math
from pathlib import Path

import pytest

from prune_audit.data.synth import ensure_synth_split
from prune_audit.engine import TrainConfig, evaluate, load_checkpoint
from prune_audit.harness import (
    ExperimentPlan,
    RunRecord,
    append_record,
    format_record,
    load_datasets,
    parse_record,
    partial_retrain_fraction,
    plan_combinations,
    pretrain,
    read_registry,
    records_to_points,
    resolve_data_root,
    run_combination,
    sweep,
)
from prune_audit.pruning import PruningCombination, PruningPlan, Sample
from prune_audit.zoo import VariantSpec

from conftest import DATA_CACHE


def _micro_plan(ratio=0.2, repeats=2, retrain_fraction=1.0, mode=None, base_seed=0):
    return ExperimentPlan(
        dataset="synth",
        variant=VariantSpec(),
        pretrain=TrainConfig(1, 64, 0.9, 1e-4, ((0, 0.01),)),
        retrain=TrainConfig(1, 64, 0.9, 1e-4, ((0, 0.005),)),
        pruning=PruningPlan(layer_ratios=(0.0, ratio, 0.0),
                            mode=mode or Sample(count=6, seed=1)),
        repeats=repeats,
        base_seed=base_seed,
        retrain_fraction=retrain_fraction,
        data_root=str(DATA_CACHE / "data"),
        train_subset=512,
    )


@pytest.fixture(scope="module")
def micro_setup(tmp_path_factory, synth_split_module):
    workdir = tmp_path_factory.mktemp("micro")
    plan = _micro_plan()
    ckpt = pretrain(plan, workdir)
    dense = load_checkpoint(ckpt)
    split = load_datasets(plan, workdir)
    return plan, workdir, dense, split


@pytest.fixture(scope="module")
def synth_split_module():
    return ensure_synth_split(DATA_CACHE / "data")


# --- plan validation ----------------------------------------------------------

def test_plan_invariants():
    with pytest.raises(ValueError):
        _micro_plan(repeats=0)
    with pytest.raises(ValueError):
        _micro_plan(retrain_fraction=0.0)
    with pytest.raises(ValueError):
        _micro_plan(retrain_fraction=1.5)


def test_resolve_data_root_precedence(monkeypatch, tmp_path):
    plan = _micro_plan()
    assert resolve_data_root(plan) == Path(plan.data_root)
    from dataclasses import replace as dc_replace
    bare = dc_replace(plan, data_root=None)
    monkeypatch.setenv("PRUNE_AUDIT_DATA", str(tmp_path / "envroot"))
    assert resolve_data_root(bare) == tmp_path / "envroot"
    monkeypatch.delenv("PRUNE_AUDIT_DATA")
    assert resolve_data_root(bare, workdir=tmp_path) == tmp_path / "data"


# --- partial retraining scaling -------------------------------------------------

def test_partial_fraction_scales_epochs_and_milestones():
    config = TrainConfig(30, 256, 0.9, 1e-4, ((0, 1e-2), (20, 1e-3)))
    scaled = partial_retrain_fraction(config, 0.1)
    assert scaled.epochs == 3
    assert scaled.lr_schedule == ((0, 1e-2), (2, 1e-3))
    assert scaled.batch_size == 256 and scaled.momentum == 0.9


def test_partial_fraction_identity():
    config = TrainConfig(30, 256, 0.9, 1e-4, ((0, 1e-2), (20, 1e-3)))
    assert partial_retrain_fraction(config, 1.0) is config


def test_partial_fraction_long_schedule():
    config = TrainConfig(120, 256, 0.9, 5e-4, ((0, 1e-2), (60, 1e-3), (90, 1e-4)))
    scaled = partial_retrain_fraction(config, 0.1)
    assert scaled.epochs == 12
    assert scaled.lr_schedule == ((0, 1e-2), (6, 1e-3), (9, 1e-4))


def test_partial_fraction_rounds_half_up_and_floors_epochs_at_one():
    config = TrainConfig(4, 8, 0.9, 0.0, ((0, 1e-2), (25, 1e-3)))
    scaled = partial_retrain_fraction(config, 0.1)
    assert scaled.epochs == 1                      # max(1, round(0.4))
    assert scaled.lr_schedule == ((0, 1e-2), (3, 1e-3))  # 2.5 rounds up


def test_partial_fraction_collapsing_milestones_keep_later_rate():
    config = TrainConfig(10, 8, 0.9, 0.0, ((0, 1e-2), (1, 1e-3), (2, 1e-4)))
    scaled = partial_retrain_fraction(config, 0.5)
    assert scaled.lr_schedule == ((0, 1e-2), (1, 1e-4))


def test_partial_fraction_bounds():
    config = TrainConfig(10, 8, 0.9, 0.0, ((0, 1e-2),))
    for bad in (0.0, -0.5, 1.0001):
        with pytest.raises(ValueError):
            partial_retrain_fraction(config, bad)


# --- pretraining -----------------------------------------------------------------

def test_pretrain_writes_checkpoint_and_log(micro_setup):
    plan, workdir, dense, split = micro_setup
    assert (workdir / "dense.ckpt").exists()
    log = (workdir / "pretrain_log.csv").read_text().splitlines()
    assert log[0] == "epoch,lr,train_loss,test_loss,test_accuracy"
    assert len(log) == 1 + plan.pretrain.epochs


def test_pretrain_is_idempotent_and_deterministic(tmp_path):
    plan = _micro_plan()
    a = pretrain(plan, tmp_path / "a")
    b = pretrain(plan, tmp_path / "b")
    assert Path(a).read_bytes() == Path(b).read_bytes()
    again = pretrain(plan, tmp_path / "a")  # no-op on existing checkpoint
    assert Path(again).read_bytes() == Path(a).read_bytes()


# --- run_combination ---------------------------------------------------------------

def test_no_op_retraining_preserves_pruned_metrics(micro_setup):
    plan, workdir, dense, split = micro_setup
    from dataclasses import replace as dc_replace
    frozen = dc_replace(plan, retrain=TrainConfig(0, 64, 0.9, 1e-4, ((0, 0.005),)),
                        repeats=1)
    combo = plan_combinations(plan)[0]
    rec = run_combination(dense, combo, frozen, split)
    from prune_audit.pruning import apply_combination

    pruned = apply_combination(dense, combo)
    loss, acc = evaluate(pruned, split.test)
    assert rec.test_accuracies[0] == pytest.approx(acc)
    assert rec.test_losses[0] == pytest.approx(loss)


def test_record_schema_matches_repeats(micro_setup):
    plan, workdir, dense, split = micro_setup
    combo = plan_combinations(plan)[1]
    rec = run_combination(dense, combo, plan, split)
    assert len(rec.test_accuracies) == plan.repeats == 2
    assert len(rec.seeds) == plan.repeats
    assert rec.accuracy_mean == pytest.approx(sum(rec.test_accuracies) / 2)
    assert all(0.0 <= a <= 100.0 for a in rec.test_accuracies)
    assert rec.status == "ok"


def test_empty_combination_loss_equals_dense_loss(micro_setup):
    plan, workdir, dense, split = micro_setup
    from prune_audit.engine import evaluate_loss

    rec = run_combination(dense, PruningCombination(removed=()), plan, split)
    assert rec.pruned_train_loss == pytest.approx(
        evaluate_loss(dense, split.train), abs=1e-6
    )


def test_loss_measured_before_any_retraining_step(micro_setup):
    plan, workdir, dense, split = micro_setup
    steps_at_measurement = []
    counter = {"steps": 0}

    def on_step(step, loss):
        counter["steps"] += 1

    def on_measured(ptl):
        steps_at_measurement.append(counter["steps"])

    run_combination(dense, plan_combinations(plan)[0], plan, split,
                    on_retrain_step=on_step, on_loss_measured=on_measured)
    assert steps_at_measurement == [0]
    assert counter["steps"] > 0


def test_failed_combination_is_recorded_not_raised(micro_setup):
    plan, workdir, dense, split = micro_setup
    bogus = PruningCombination(removed=((9, (0,)),))
    rec = run_combination(dense, bogus, plan, split)
    assert rec.status == "failed"
    assert "prunable" in rec.error
    assert math.isnan(rec.pruned_train_loss)
    points, excluded = records_to_points([rec])
    assert points == [] and excluded == 1


def test_run_seeds_hash_base_seed_combo_and_repeat(micro_setup):
    plan, workdir, dense, split = micro_setup
    from prune_audit.seeding import derive_seed

    combo = plan_combinations(plan)[2]
    rec = run_combination(dense, combo, plan, split)
    assert rec.seeds == tuple(
        derive_seed(plan.base_seed, combo.encode(), r) for r in range(plan.repeats)
    )
    other = run_combination(dense, plan_combinations(plan)[3], plan, split)
    assert set(rec.seeds).isdisjoint(other.seeds)


# --- registry ------------------------------------------------------------------------

def _sample_record():
    return RunRecord(
        combination="L1:{0,3}",
        pruned_train_loss=1.25,
        test_accuracies=(91.5, 92.0),
        test_losses=(0.31, 0.29),
        accuracy_mean=91.75,
        loss_mean=0.3,
        seeds=(12, 34),
        wall_time_s=3.25,
        status="ok",
        error="",
    )


def test_registry_line_round_trip():
    rec = _sample_record()
    assert parse_record(format_record(rec)) == rec


def test_registry_round_trips_failure_messages_with_spaces():
    rec = RunRecord(
        combination="L0:{1}", pruned_train_loss=float("nan"),
        test_accuracies=(), test_losses=(), accuracy_mean=float("nan"),
        loss_mean=float("nan"), seeds=(), wall_time_s=0.1,
        status="failed", error="EngineError: diverged at epoch 0, step 3",
    )
    back = parse_record(format_record(rec))
    assert back.error == rec.error
    assert math.isnan(back.pruned_train_loss)


def test_registry_file_append_and_read(tmp_path):
    path = tmp_path / "registry.txt"
    a, b = _sample_record(), _sample_record()
    from dataclasses import replace as dc_replace
    b = dc_replace(b, combination="L1:{1,2}")
    append_record(path, a)
    append_record(path, b)
    records = read_registry(path)
    assert set(records) == {"L1:{0,3}", "L1:{1,2}"}
    assert records["L1:{0,3}"] == a


def test_registry_full_float_precision():
    from dataclasses import replace as dc_replace
    rec = dc_replace(_sample_record(), pruned_train_loss=0.1234567890123456789)
    assert parse_record(format_record(rec)).pruned_train_loss == rec.pruned_train_loss


# --- sweep ---------------------------------------------------------------------------

def test_sweep_worker_counts_and_resume(tmp_path):
    plan = _micro_plan(repeats=1)
    one = sweep(plan, tmp_path / "w1", workers=1)
    multi = sweep(plan, tmp_path / "w2", workers=2)
    assert len(one) == 6
    key = lambda r: r.combination
    assert sorted((r.without_wall_time() for r in one), key=key) == \
        sorted((r.without_wall_time() for r in multi), key=key)

    # simulate a kill after two completed records: drop the tail
    registry = (tmp_path / "w1" / "registry.txt")
    lines = registry.read_text().splitlines(keepends=True)
    registry.write_text("".join(lines[:2]))
    resumed = sweep(plan, tmp_path / "w1", workers=1)
    assert sorted((r.without_wall_time() for r in resumed), key=key) == \
        sorted((r.without_wall_time() for r in one), key=key)


def test_sweep_fresh_ignores_existing_registry(tmp_path):
    plan = _micro_plan(repeats=1, mode=Sample(count=2, seed=9))
    first = sweep(plan, tmp_path, workers=1)
    poisoned = (tmp_path / "registry.txt")
    poisoned.write_text(poisoned.read_text().replace("status=ok", "status=failed"))
    again = sweep(plan, tmp_path, workers=1, resume=False)
    assert all(r.status == "ok" for r in again)
    key = lambda r: r.combination
    assert sorted((r.without_wall_time() for r in again), key=key) == \
        sorted((r.without_wall_time() for r in first), key=key)
