"""Validity analytics on a shipped set of 10 head-pruning runs.

Ten pruning combinations of a large vision transformer were each measured
right after pruning (train loss) and again after full retraining (test
accuracy and loss).  If picking the combination with the smallest pruned
train loss were a sound selection rule, the rank correlation against final
accuracy would be strongly negative.  Here it is weakly positive, the
oracle pick is beaten by 2 of 10 random combinations, and 26 of 45 pairs
are counterexamples: the rule carries essentially no signal on this model.

Run:  python demos/01_correlation_analytics.py
"""

from pathlib import Path

from prune_audit import analytics

FIXTURE = Path(__file__).parent.parent / "tests" / "data" / "vit_head_pruning_runs.csv"


def main():
    points = analytics.read_points_csv(FIXTURE)
    print(f"loaded {len(points)} runs from {FIXTURE.name}\n")

    ptl = [p.pruned_train_loss for p in points]
    acc = [p.test_accuracy for p in points]
    loss = [p.test_loss for p in points]

    k_acc = analytics.kendall(ptl, acc)
    k_loss = analytics.kendall(ptl, loss)
    print(f"kendall(pruned train loss, final accuracy) = {k_acc.tau:+.2f}"
          f"  (p = {k_acc.p_value:.0%}, {k_acc.method}, "
          f"C={k_acc.concordant}, D={k_acc.discordant})")
    print(f"kendall(pruned train loss, final loss)     = {k_loss.tau:+.2f}"
          f"  (p = {k_loss.p_value:.0%}, {k_loss.method})\n")

    report = analytics.analyze(points, metric=analytics.ACCURACY)
    print(f"argmin-loss pick: combination {report.oracle_combination}")
    print(f"anomaly ratio: {report.anomaly_ratio:.0%} of runs beat that pick")
    print(f"counterexample ratio: {len(report.counterexample_pairs)}/45 pairs "
          f"= {report.counterexample_ratio:.1%}")
    print("counterexample pairs:",
          ", ".join(f"({a},{b})" for a, b in report.counterexample_pairs))
    print(f"\nverdict for the accuracy correlation: {report.verdict.upper()}")


if __name__ == "__main__":
    main()
