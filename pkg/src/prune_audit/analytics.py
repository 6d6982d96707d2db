"""Rank-correlation analytics over prune/retrain outcomes.

The central question: does a lower train loss right after pruning predict
a better test metric after retraining?  Tools here quantify that with
Kendall's tau (tau-a convention: ties count toward neither concordant nor
discordant, denominator n(n-1)/2), a two-sided p-value (exact permutation
null for small tie-free samples, tie-adjusted normal approximation
otherwise), plus two coarser sanity ratios:

* anomaly ratio    -- fraction of runs beating the argmin-loss run's final
                      metric; a sound selection rule keeps this well below
                      50%.
* counterexample ratio -- fraction of run pairs where the lower pruned
                      train loss ends up with the strictly worse final
                      metric.

A correlation verdict is "valid" only when tau exceeds 0.2 in magnitude
with the expected sign (negative against accuracy, positive against test
loss) and the p-value is below 5%.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

ACCURACY = "acc"
LOSS = "loss"

EXACT_MAX_N = 33  # exact permutation null is used for tie-free n up to here


def _check_metric(metric: str) -> str:
    if metric not in (ACCURACY, LOSS):
        raise ValueError(f"metric must be '{ACCURACY}' or '{LOSS}', got '{metric}'")
    return metric


@dataclass(frozen=True)
class KendallResult:
    tau: float
    concordant: int
    discordant: int
    n: int
    p_value: float | None = None
    method: str | None = None            # "exact" | "normal" once p is set
    tie_groups_x: tuple[int, ...] = ()   # sizes of tie groups (>1) per coordinate
    tie_groups_y: tuple[int, ...] = ()

    @property
    def has_ties(self) -> bool:
        return bool(self.tie_groups_x or self.tie_groups_y)


def _tie_groups(values: np.ndarray) -> tuple[int, ...]:
    _, counts = np.unique(values, return_counts=True)
    return tuple(int(c) for c in counts[counts > 1])


def kendall_tau(x, y, variant: str = "a") -> KendallResult:
    """Pairwise concordance count; returns tau without a p-value.

    ``variant="b"`` switches the denominator to the tie-corrected
    sqrt((n0-tx)(n0-ty)) form for cross-checks.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"x and y must be equal-length vectors, got {x.shape} vs {y.shape}")
    n = len(x)
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    iu = np.triu_indices(n, k=1)
    sx = np.sign(x[:, None] - x[None, :])[iu]
    sy = np.sign(y[:, None] - y[None, :])[iu]
    s = sx * sy
    concordant = int((s > 0).sum())
    discordant = int((s < 0).sum())
    n0 = n * (n - 1) // 2
    groups_x, groups_y = _tie_groups(x), _tie_groups(y)
    if variant == "a":
        denom = float(n0)
    elif variant == "b":
        tx = sum(t * (t - 1) // 2 for t in groups_x)
        ty = sum(t * (t - 1) // 2 for t in groups_y)
        denom = math.sqrt((n0 - tx) * (n0 - ty))
    else:
        raise ValueError(f"variant must be 'a' or 'b', got '{variant}'")
    return KendallResult(
        tau=(concordant - discordant) / denom,
        concordant=concordant,
        discordant=discordant,
        n=n,
        tie_groups_x=groups_x,
        tie_groups_y=groups_y,
    )


@lru_cache(maxsize=64)
def _inversion_counts(n: int) -> tuple[int, ...]:
    """Number of permutations of n items with k discordant pairs, k=0..n0.

    Built by the classic recurrence: appending item m shifts the count by
    0..m-1 inversions.
    """
    counts = [1]
    for m in range(2, n + 1):
        nxt = [0] * (len(counts) + m - 1)
        running = 0
        # nxt[k] = sum_{i=0}^{m-1} counts[k-i], computed as a sliding sum
        for k in range(len(nxt)):
            if k < len(counts):
                running += counts[k]
            if k - m >= 0:
                running -= counts[k - m]
            nxt[k] = running
        counts = nxt
    return tuple(counts)


def _exact_two_sided_p(n: int, t_stat: int) -> float:
    counts = _inversion_counts(n)
    total = math.factorial(n)
    n0 = n * (n - 1) // 2
    d_small = (n0 - abs(t_stat)) // 2
    tail = sum(counts[: d_small + 1])
    return min(1.0, 2.0 * tail / total)


def _tie_adjusted_variance(n: int, groups_x, groups_y) -> float:
    v0 = n * (n - 1) * (2 * n + 5)
    vt = sum(t * (t - 1) * (2 * t + 5) for t in groups_x)
    vu = sum(t * (t - 1) * (2 * t + 5) for t in groups_y)
    v1 = (sum(t * (t - 1) for t in groups_x) * sum(t * (t - 1) for t in groups_y))
    v2 = (sum(t * (t - 1) * (t - 2) for t in groups_x)
          * sum(t * (t - 1) * (t - 2) for t in groups_y))
    var = (v0 - vt - vu) / 18.0 + v1 / (2.0 * n * (n - 1))
    if n > 2:
        var += v2 / (9.0 * n * (n - 1) * (n - 2))
    return var


def kendall_pvalue(result: KendallResult, method: str = "auto") -> KendallResult:
    """Attach a two-sided p-value to a :func:`kendall_tau` result.

    ``auto`` picks the exact permutation null for tie-free samples with
    n <= 33, otherwise a normal approximation with tie-adjusted variance
    and a continuity correction of half the support step of C - D (the
    statistic moves in steps of 2 without ties, 1 with them).
    """
    if method == "auto":
        method = "exact" if (not result.has_ties and result.n <= EXACT_MAX_N) else "normal"
    t_stat = result.concordant - result.discordant
    if method == "exact":
        if result.has_ties:
            raise ValueError("exact p-value is undefined in the presence of ties")
        if result.n > EXACT_MAX_N:
            raise ValueError(f"exact p-value supported only for n <= {EXACT_MAX_N}")
        p = _exact_two_sided_p(result.n, t_stat)
    elif method == "normal":
        var = _tie_adjusted_variance(result.n, result.tie_groups_x, result.tie_groups_y)
        if var <= 0.0:
            p = 1.0  # a fully tied coordinate makes the statistic constant
        else:
            cc = 0.5 if result.has_ties else 1.0
            z = max(abs(t_stat) - cc, 0.0) / math.sqrt(var)
            p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    else:
        raise ValueError(f"method must be 'auto', 'exact' or 'normal', got '{method}'")
    return replace(result, p_value=p, method=method)


def kendall(x, y, method: str = "auto", variant: str = "a") -> KendallResult:
    """tau and p-value in one call."""
    return kendall_pvalue(kendall_tau(x, y, variant=variant), method=method)


@dataclass(frozen=True)
class OutcomePoint:
    """One pruning combination's measured outcome, ready for analysis."""

    combination: str
    pruned_train_loss: float
    test_accuracy: float
    test_loss: float


def metric_value(point: OutcomePoint, metric: str) -> float:
    return point.test_accuracy if _check_metric(metric) == ACCURACY else point.test_loss


def _strictly_better(a: float, b: float, metric: str) -> bool:
    """Is final metric ``a`` strictly better than ``b``?"""
    return a > b if metric == ACCURACY else a < b


def oracle_point(points) -> OutcomePoint:
    """The point the argmin-loss selection rule would pick (ties break

    toward the first occurrence).
    """
    points = list(points)
    if not points:
        raise ValueError("no points to select from")
    return min(points, key=lambda p: p.pruned_train_loss)


def anomaly_ratio(points, oracle: OutcomePoint, metric: str) -> float:
    """Fraction of points whose final metric strictly beats the oracle's."""
    points = list(points)
    _check_metric(metric)
    if not points:
        raise ValueError("no points given")
    if oracle not in points:
        raise ValueError("oracle point is not among the given points")
    ref = metric_value(oracle, metric)
    hits = sum(1 for p in points if _strictly_better(metric_value(p, metric), ref, metric))
    return hits / len(points)


def pair_outcomes(points, metric: str):
    """Classify every unordered pair: counterexample / confirmation / neutral.

    A counterexample is a pair where the strictly lower pruned train loss
    goes with the strictly worse final metric.  Exact ties in either
    coordinate are neutral.  Pairs are (i, j) positions with i < j.
    """
    points = list(points)
    _check_metric(metric)
    if len(points) < 2:
        raise ValueError(f"need at least 2 points, got {len(points)}")
    counter, confirm, neutral = [], [], []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            a, b = points[i], points[j]
            if a.pruned_train_loss == b.pruned_train_loss:
                neutral.append((i, j))
                continue
            low, high = (a, b) if a.pruned_train_loss < b.pruned_train_loss else (b, a)
            vl, vh = metric_value(low, metric), metric_value(high, metric)
            if _strictly_better(vh, vl, metric):
                counter.append((i, j))
            elif _strictly_better(vl, vh, metric):
                confirm.append((i, j))
            else:
                neutral.append((i, j))
    return counter, confirm, neutral


def counterexample_ratio(points, metric: str):
    """Returns ``(ratio, pairs)`` with pairs as (combination, combination)

    labels in ascending positional order.
    """
    points = list(points)
    counter, _, _ = pair_outcomes(points, metric)
    total = len(points) * (len(points) - 1) // 2
    pairs = [(points[i].combination, points[j].combination) for i, j in counter]
    return len(counter) / total, pairs


VALID = "valid"
INVALID = "invalid"


def validity_verdict(tau: float, p_value: float, metric: str) -> str:
    """Apply the correlation-validity rule for the given final metric."""
    _check_metric(metric)
    if not -1.0 <= tau <= 1.0:
        raise ValueError(f"tau out of range: {tau}")
    if not 0.0 <= p_value <= 1.0:
        raise ValueError(f"p-value out of range: {p_value}")
    if p_value >= 0.05:
        return INVALID
    if metric == ACCURACY:
        return VALID if tau < -0.2 else INVALID
    return VALID if tau > 0.2 else INVALID


def partial_retrain_correlation(partial_points, full_points) -> KendallResult:
    """Kendall correlation between partially- and fully-retrained test

    accuracy over matched combinations.
    """
    partial = {p.combination: p for p in partial_points}
    full = {p.combination: p for p in full_points}
    if set(partial) != set(full):
        only_partial = sorted(set(partial) - set(full))
        only_full = sorted(set(full) - set(partial))
        raise ValueError(
            "combination sets differ; only in partial: "
            f"{only_partial}; only in full: {only_full}"
        )
    keys = sorted(partial)
    x = [partial[k].test_accuracy for k in keys]
    y = [full[k].test_accuracy for k in keys]
    return kendall(x, y)


@dataclass(frozen=True)
class AnalysisReport:
    """Everything the validity check produces for one sweep."""

    metric: str
    n: int
    kendall_accuracy: KendallResult    # pruned train loss vs final test accuracy
    kendall_loss: KendallResult        # pruned train loss vs final test loss
    anomaly_ratio: float
    counterexample_ratio: float
    counterexample_pairs: tuple[tuple[str, str], ...]
    verdict: str
    oracle_combination: str
    excluded: int = 0                  # failed runs left out of the analysis


def analyze(points, metric: str = ACCURACY, excluded: int = 0) -> AnalysisReport:
    points = list(points)
    _check_metric(metric)
    ptl = [p.pruned_train_loss for p in points]
    k_acc = kendall(ptl, [p.test_accuracy for p in points])
    k_loss = kendall(ptl, [p.test_loss for p in points])
    oracle = oracle_point(points)
    ratio, pairs = counterexample_ratio(points, metric)
    primary = k_acc if metric == ACCURACY else k_loss
    return AnalysisReport(
        metric=metric,
        n=len(points),
        kendall_accuracy=k_acc,
        kendall_loss=k_loss,
        anomaly_ratio=anomaly_ratio(points, oracle, metric),
        counterexample_ratio=ratio,
        counterexample_pairs=tuple(pairs),
        verdict=validity_verdict(primary.tau, primary.p_value, metric),
        oracle_combination=oracle.combination,
        excluded=excluded,
    )


def read_points_csv(path) -> list[OutcomePoint]:
    """Load outcome points from a CSV with a header row.

    Recognized columns: ``pruned_train_loss`` (required), ``test_accuracy``,
    ``test_loss`` (at least one required) and optional ``combination``;
    missing combinations default to the 1-based row number.
    """
    with open(Path(path), newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    if "pruned_train_loss" not in rows[0]:
        raise ValueError(f"{path}: missing required column 'pruned_train_loss'")
    if "test_accuracy" not in rows[0] and "test_loss" not in rows[0]:
        raise ValueError(f"{path}: need a 'test_accuracy' or 'test_loss' column")
    points = []
    for i, row in enumerate(rows, start=1):
        points.append(OutcomePoint(
            combination=row.get("combination") or str(i),
            pruned_train_loss=float(row["pruned_train_loss"]),
            test_accuracy=float(row.get("test_accuracy") or "nan"),
            test_loss=float(row.get("test_loss") or "nan"),
        ))
    return points
