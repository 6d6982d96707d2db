"""End-to-end micro audit: pretrain, sweep a sample of combinations with

repeats, then compute the validity report and emit the scatter plot.

Everything lands in ./demo-runs: the checkpoint, the training log, the
append-only registry (kill and re-run this script: finished combinations
are skipped), scatter.csv / scatter.svg and analysis.json.

Run:  python demos/03_sweep_and_report.py
"""

from pathlib import Path

from prune_audit import analytics
from prune_audit.engine import TrainConfig
from prune_audit.harness import ExperimentPlan, records_to_points, sweep
from prune_audit.pruning import PruningPlan, Sample
from prune_audit.report import emit_scatter
from prune_audit.zoo import VariantSpec

WORKDIR = Path("demo-runs")


def main():
    plan = ExperimentPlan(
        dataset="synth",
        variant=VariantSpec(),                      # W10D5
        pretrain=TrainConfig(3, 8, 0.9, 1e-4, ((0, 0.003), (2, 0.001))),
        retrain=TrainConfig(2, 64, 0.9, 1e-4, ((0, 5e-4),)),
        pruning=PruningPlan(layer_ratios=(0.0, 0.2, 0.0), mode=Sample(count=10, seed=7)),
        repeats=2,
        base_seed=8,
        data_root="demo-data",
        train_subset=4000,
        subset_seed=1,
    )
    records = sweep(plan, WORKDIR, workers=1)
    print(f"swept {len(records)} combinations "
          f"(registry: {WORKDIR / 'registry.txt'})")

    points, excluded = records_to_points(records)
    report = analytics.analyze(points, metric=analytics.ACCURACY, excluded=excluded)
    k = report.kendall_accuracy
    print(f"\nkendall(pruned train loss, final accuracy): tau={k.tau:+.2f} "
          f"p={k.p_value:.2e} ({k.method})")
    print(f"anomaly ratio {report.anomaly_ratio:.0%}, "
          f"counterexamples {report.counterexample_ratio:.0%}, "
          f"verdict: {report.verdict}")

    csv_path, svg_path = emit_scatter(records, "acc", WORKDIR / "scatter",
                                      title="pruned train loss vs final accuracy")
    print(f"\nwrote {csv_path} and {svg_path} "
          f"(star = argmin-loss pick, red = runs that beat it)")


if __name__ == "__main__":
    main()
