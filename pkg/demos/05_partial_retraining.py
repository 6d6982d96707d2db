"""Cheap proxy check: a fraction of the retraining schedule, scaled.

Full retraining of every pruning combination is the expensive part of an
audit.  This demo retrains a handful of combinations twice (a scaled-down
schedule vs the full one) and compares two predictors of the final
accuracy ranking: the accuracy after partial retraining, and the train
loss right after pruning.  The partially retrained accuracy is the far
better proxy.

Run:  python demos/05_partial_retraining.py
"""

from dataclasses import replace
from pathlib import Path

from prune_audit import analytics
from prune_audit.engine import TrainConfig
from prune_audit.harness import (
    ExperimentPlan,
    partial_retrain_fraction,
    records_to_points,
    sweep,
)
from prune_audit.pruning import PruningPlan, Sample
from prune_audit.zoo import VariantSpec


def main():
    retrain = TrainConfig(30, 256, 0.9, 1e-4, ((0, 1e-3), (20, 1e-4)))
    scaled = partial_retrain_fraction(retrain, 0.1)
    print("schedule scaling at fraction 0.1:")
    print(f"  epochs     {retrain.epochs} -> {scaled.epochs}")
    print(f"  milestones {retrain.lr_schedule} -> {scaled.lr_schedule}\n")

    plan = ExperimentPlan(
        dataset="synth",
        variant=VariantSpec(),
        pretrain=TrainConfig(3, 8, 0.9, 1e-4, ((0, 0.003), (2, 0.001))),
        retrain=TrainConfig(2, 64, 0.9, 1e-4, ((0, 5e-4),)),
        pruning=PruningPlan(layer_ratios=(0.0, 0.3, 0.0), mode=Sample(count=8, seed=2)),
        repeats=2,
        base_seed=8,
        data_root="demo-data",
        train_subset=4000,
        subset_seed=1,
    )
    full_records = sweep(plan, Path("demo-runs-full"), workers=1)
    partial_plan = replace(plan, retrain_fraction=0.5)   # 1 of 2 epochs
    partial_records = sweep(partial_plan, Path("demo-runs-partial"), workers=1)

    full_points, _ = records_to_points(full_records)
    partial_points, _ = records_to_points(partial_records)

    proxy = analytics.partial_retrain_correlation(partial_points, full_points)
    ptl = analytics.kendall(
        [p.pruned_train_loss for p in full_points],
        [p.test_accuracy for p in full_points],
    )
    print(f"kendall(partial-retrain acc, full-retrain acc) = {proxy.tau:+.2f}")
    print(f"kendall(pruned train loss,   full-retrain acc) = {ptl.tau:+.2f}")
    print("\n-> rank pruned models after a short retraining pass, "
          "not straight after pruning")


if __name__ == "__main__":
    main()
