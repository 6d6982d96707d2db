"""Sweep orchestration: pretrain once, then prune/retrain every combination.

The pipeline for one combination is strictly ordered: shrink the network,
measure the training loss of the shrunk network (before any update), then
retrain ``repeats`` times and record test metrics per repeat.  Each run's
seed is a hash of (base seed, combination encoding, repeat index), so
results do not depend on worker count, scheduling order, or restarts.

Results stream into a plain-text registry (one self-describing line per
combination, single writer).  Completed combinations are skipped on
resume, making interrupted sweeps cheap to finish.
"""

from __future__ import annotations

import os
import time
import urllib.parse
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from pathlib import Path

from .analytics import OutcomePoint
from .data.dataset import SplitPair, load_split, standardize, subset
from .data.synth import ensure_synth_split
from .engine import (
    NetworkState,
    TrainConfig,
    evaluate,
    init_state,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .pruning import (
    PruningCombination,
    PruningPlan,
    apply_combination,
    enumerate_combinations,
    pruned_train_loss,
    prunable_widths,
)
from .seeding import derive_seed
from .zoo import VariantSpec, build_lenet5_mini

DATA_ENV_VAR = "PRUNE_AUDIT_DATA"
CHECKPOINT_NAME = "dense.ckpt"
REGISTRY_NAME = "registry.txt"


@dataclass(frozen=True)
class ExperimentPlan:
    dataset: str
    variant: VariantSpec
    pretrain: TrainConfig
    retrain: TrainConfig
    pruning: PruningPlan
    repeats: int = 3
    base_seed: int = 0
    retrain_fraction: float = 1.0
    data_root: str | None = None
    train_subset: int | None = None
    subset_seed: int = 0

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if not 0.0 < self.retrain_fraction <= 1.0:
            raise ValueError(
                f"retrain_fraction must lie in (0, 1], got {self.retrain_fraction}"
            )
        if self.train_subset is not None and self.train_subset < 1:
            raise ValueError(f"train_subset must be positive, got {self.train_subset}")


@dataclass(frozen=True)
class RunRecord:
    """Measured outcome of one pruning combination."""

    combination: str
    pruned_train_loss: float
    test_accuracies: tuple[float, ...]
    test_losses: tuple[float, ...]
    accuracy_mean: float
    loss_mean: float
    seeds: tuple[int, ...]
    wall_time_s: float
    status: str = "ok"
    error: str = ""

    def to_point(self) -> OutcomePoint:
        return OutcomePoint(
            combination=self.combination,
            pruned_train_loss=self.pruned_train_loss,
            test_accuracy=self.accuracy_mean,
            test_loss=self.loss_mean,
        )

    def without_wall_time(self) -> "RunRecord":
        """Copy with the only nondeterministic field zeroed (for comparisons)."""
        return replace(self, wall_time_s=0.0)


def resolve_data_root(plan: ExperimentPlan, workdir=None) -> Path:
    if plan.data_root:
        return Path(plan.data_root)
    env = os.environ.get(DATA_ENV_VAR)
    if env:
        return Path(env)
    if workdir is not None:
        return Path(workdir) / "data"
    return Path("data")


def load_datasets(plan: ExperimentPlan, workdir=None) -> SplitPair:
    """Load, subset and standardize the plan's dataset.

    The synthetic corpus is generated on demand; anything else must exist
    as IDX files under the resolved data root.  Test images are normalized
    with the training set's statistics.
    """
    root = resolve_data_root(plan, workdir)
    if plan.dataset == "synth":
        pair = ensure_synth_split(root)
    else:
        pair = load_split(root, plan.dataset)
    train_ds = pair.train
    if plan.train_subset is not None:
        train_ds = subset(train_ds, plan.train_subset,
                          derive_seed(plan.subset_seed, "train-subset"))
    train_ds, stats = standardize(train_ds)
    test_ds, _ = standardize(pair.test, stats)
    return SplitPair(train=train_ds, test=test_ds)


def build_network(plan: ExperimentPlan) -> NetworkState:
    spec = build_lenet5_mini(plan.variant)
    return init_state(spec, seed=derive_seed(plan.base_seed, "init", plan.variant.name))


def pretrain(plan: ExperimentPlan, workdir) -> Path:
    """Train the dense network and persist checkpoint plus a per-epoch log.

    Re-running with an existing checkpoint is a no-op.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    ckpt_path = workdir / CHECKPOINT_NAME
    if ckpt_path.exists():
        return ckpt_path
    split = load_datasets(plan, workdir)
    state = build_network(plan)
    state, logs = train(state, split.train, plan.pretrain,
                        seed=derive_seed(plan.base_seed, "pretrain"),
                        test_ds=split.test)
    save_checkpoint(state, ckpt_path)
    log_path = workdir / "pretrain_log.csv"
    lines = ["epoch,lr,train_loss,test_loss,test_accuracy"]
    lines += [
        f"{e.epoch},{e.lr!r},{e.train_loss!r},{e.test_loss!r},{e.test_accuracy!r}"
        for e in logs
    ]
    log_path.write_text("\n".join(lines) + "\n")
    return ckpt_path


def _half_up(x: float) -> int:
    return int(x + 0.5) if x >= 0 else -int(-x + 0.5)


def partial_retrain_fraction(config: TrainConfig, fraction: float) -> TrainConfig:
    """Scale a retraining stage to a fraction of its epochs, with the LR

    milestones scaled proportionally (half-up rounding, rates unchanged).
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    if fraction == 1.0:
        return config
    epochs = max(1, _half_up(fraction * config.epochs))
    milestones: list[tuple[int, float]] = []
    for start, rate in config.lr_schedule:
        scaled = _half_up(start * fraction)
        if milestones and milestones[-1][0] == scaled:
            milestones[-1] = (scaled, rate)  # collapsed milestones keep the later rate
        else:
            milestones.append((scaled, rate))
    return replace(config, epochs=epochs, lr_schedule=tuple(milestones))


def run_combination(dense: NetworkState, combo: PruningCombination,
                    plan: ExperimentPlan, split: SplitPair,
                    on_retrain_step=None, on_loss_measured=None) -> RunRecord:
    """Prune, measure the pruned train loss, then retrain and evaluate

    ``repeats`` times.  Failures produce a ``status="failed"`` record
    instead of raising.
    """
    t0 = time.perf_counter()
    encoding = combo.encode()
    seeds = tuple(
        derive_seed(plan.base_seed, encoding, r) for r in range(plan.repeats)
    )
    try:
        pruned = apply_combination(dense, combo)
        ptl = pruned_train_loss(pruned, split.train)
        if on_loss_measured is not None:
            on_loss_measured(ptl)
        config = partial_retrain_fraction(plan.retrain, plan.retrain_fraction)
        accuracies, losses = [], []
        for seed in seeds:
            if config.epochs == 0:
                retrained = pruned
            else:
                retrained, _ = train(pruned, split.train, config, seed,
                                     on_step=on_retrain_step)
            loss, acc = evaluate(retrained, split.test)
            accuracies.append(acc)
            losses.append(loss)
        return RunRecord(
            combination=encoding,
            pruned_train_loss=ptl,
            test_accuracies=tuple(accuracies),
            test_losses=tuple(losses),
            accuracy_mean=sum(accuracies) / len(accuracies),
            loss_mean=sum(losses) / len(losses),
            seeds=seeds,
            wall_time_s=time.perf_counter() - t0,
        )
    except Exception as exc:  # failed runs are excluded downstream, disclosed
        return RunRecord(
            combination=encoding,
            pruned_train_loss=float("nan"),
            test_accuracies=(),
            test_losses=(),
            accuracy_mean=float("nan"),
            loss_mean=float("nan"),
            seeds=seeds,
            wall_time_s=time.perf_counter() - t0,
            status="failed",
            error=f"{type(exc).__name__}: {exc}",
        )


# ---------------------------------------------------------------------------
# registry: one key=value line per record, append-only, single writer

def format_record(rec: RunRecord) -> str:
    def join(values):
        return ",".join(repr(float(v)) for v in values)

    fields = [
        f"combination={rec.combination}",
        f"pruned_train_loss={rec.pruned_train_loss!r}",
        f"acc={join(rec.test_accuracies)}",
        f"acc_mean={rec.accuracy_mean!r}",
        f"loss={join(rec.test_losses)}",
        f"loss_mean={rec.loss_mean!r}",
        f"seeds={','.join(str(s) for s in rec.seeds)}",
        f"wall_time_s={rec.wall_time_s!r}",
        f"status={rec.status}",
        f"error={urllib.parse.quote(rec.error, safe='')}",
    ]
    return " ".join(fields)


def parse_record(line: str) -> RunRecord:
    kv = {}
    for token in line.strip().split(" "):
        key, _, value = token.partition("=")
        kv[key] = value

    def floats(text):
        return tuple(float(v) for v in text.split(",")) if text else ()

    return RunRecord(
        combination=kv["combination"],
        pruned_train_loss=float(kv["pruned_train_loss"]),
        test_accuracies=floats(kv["acc"]),
        test_losses=floats(kv["loss"]),
        accuracy_mean=float(kv["acc_mean"]),
        loss_mean=float(kv["loss_mean"]),
        seeds=tuple(int(s) for s in kv["seeds"].split(",")) if kv["seeds"] else (),
        wall_time_s=float(kv["wall_time_s"]),
        status=kv["status"],
        error=urllib.parse.unquote(kv["error"]),
    )


def append_record(path, rec: RunRecord) -> None:
    with open(path, "a", encoding="utf-8") as f:
        f.write(format_record(rec) + "\n")
        f.flush()
        os.fsync(f.fileno())


def read_registry(path) -> dict[str, RunRecord]:
    path = Path(path)
    if not path.exists():
        return {}
    records = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            rec = parse_record(line)
            records[rec.combination] = rec
    return records


# ---------------------------------------------------------------------------
# sweep execution

_WORKER_CACHE: dict = {}


def _worker_run(args):
    workdir, plan, encoding = args
    key = (str(workdir), plan)
    cached = _WORKER_CACHE.get(key)
    if cached is None:
        dense = load_checkpoint(Path(workdir) / CHECKPOINT_NAME)
        split = load_datasets(plan, workdir)
        cached = (dense, split)
        _WORKER_CACHE.clear()  # keep at most one experiment's data per process
        _WORKER_CACHE[key] = cached
    dense, split = cached
    return run_combination(dense, PruningCombination.parse(encoding), plan, split)


def plan_combinations(plan: ExperimentPlan) -> list[PruningCombination]:
    widths = prunable_widths(build_lenet5_mini(plan.variant))
    return enumerate_combinations(widths, plan.pruning)


def sweep(plan: ExperimentPlan, workdir, workers: int = 1,
          resume: bool = True) -> list[RunRecord]:
    """Run every combination of the plan; returns records in enumeration

    order.  With ``resume`` (default) combinations already in the registry
    are skipped, so a killed sweep continues where it stopped.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    registry_path = workdir / REGISTRY_NAME

    pretrain(plan, workdir)
    combos = plan_combinations(plan)
    done = read_registry(registry_path) if resume else {}
    if not resume and registry_path.exists():
        registry_path.unlink()
    todo = [c for c in combos if c.encode() not in done]

    if todo:
        if workers <= 1:
            dense = load_checkpoint(workdir / CHECKPOINT_NAME)
            split = load_datasets(plan, workdir)
            for combo in todo:
                rec = run_combination(dense, combo, plan, split)
                append_record(registry_path, rec)
        else:
            load_datasets(plan, workdir)  # materialize synth files before forking
            jobs = [(str(workdir), plan, c.encode()) for c in todo]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_worker_run, job) for job in jobs]
                for fut in as_completed(futures):
                    append_record(registry_path, fut.result())

    final = read_registry(registry_path)
    return [final[c.encode()] for c in combos]


def records_to_points(records) -> tuple[list[OutcomePoint], int]:
    """Analysis view of a sweep: points for OK records plus the count of

    failed records excluded.
    """
    ok = [r for r in records if r.status == "ok"]
    return [r.to_point() for r in ok], len(records) - len(ok)
