"""prune-audit: does the train loss right after pruning predict the test

performance after retraining?  This package runs the full
pretrain -> prune -> retrain pipeline on small convolutional classifiers,
exhaustively (or by seeded sampling) over filter-removal combinations, and
quantifies the answer with Kendall rank correlation, anomaly ratio and
counterexample ratio.
"""

from . import analytics, criteria, harness, plan, pruning, report, zoo
from .analytics import (
    ACCURACY,
    LOSS,
    AnalysisReport,
    KendallResult,
    OutcomePoint,
    analyze,
    anomaly_ratio,
    counterexample_ratio,
    kendall,
    kendall_pvalue,
    kendall_tau,
    partial_retrain_correlation,
    validity_verdict,
)
from .engine import NetworkSpec, NetworkState, TrainConfig
from .harness import ExperimentPlan, RunRecord, partial_retrain_fraction, sweep
from .pruning import (
    Exhaustive,
    PruningCombination,
    PruningPlan,
    Sample,
    apply_combination,
    enumerate_combinations,
    oracle_select,
    pruned_train_loss,
)
from .zoo import VariantSpec, build_lenet5_mini, parse_variant

__version__ = "0.1.0"

__all__ = [
    "ACCURACY",
    "AnalysisReport",
    "ExperimentPlan",
    "Exhaustive",
    "KendallResult",
    "LOSS",
    "NetworkSpec",
    "NetworkState",
    "OutcomePoint",
    "PruningCombination",
    "PruningPlan",
    "RunRecord",
    "Sample",
    "TrainConfig",
    "VariantSpec",
    "analytics",
    "analyze",
    "anomaly_ratio",
    "apply_combination",
    "build_lenet5_mini",
    "counterexample_ratio",
    "criteria",
    "enumerate_combinations",
    "harness",
    "kendall",
    "kendall_pvalue",
    "kendall_tau",
    "oracle_select",
    "parse_variant",
    "partial_retrain_correlation",
    "partial_retrain_fraction",
    "plan",
    "pruned_train_loss",
    "pruning",
    "report",
    "sweep",
    "validity_verdict",
    "zoo",
]
