"""Experiment plan files: a sectioned key=value text format.

Sections are ``[dataset] [model] [pretrain] [retrain] [pruning]
[analysis]``; keys mirror the fields of :class:`~prune_audit.harness.ExperimentPlan`.
Unknown sections or keys are rejected, every validation failure names the
offending ``section.key``, and parse -> serialize -> parse is idempotent.

Example::

    [dataset]
    name = synth
    train_subset = 4000

    [model]
    variant = W10D5

    [pretrain]
    epochs = 30
    batch_size = 256
    momentum = 0.9
    weight_decay = 1e-4
    lr_schedule = 0:1e-2, 20:1e-3

    [retrain]
    epochs = 30
    batch_size = 256
    momentum = 0.9
    weight_decay = 1e-4
    lr_schedule = 0:1e-3, 20:1e-4

    [pruning]
    ratios = [0, 0.5, 0]
    mode = exhaustive

    [analysis]
    repeats = 3
    base_seed = 0
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .engine import TrainConfig
from .harness import ExperimentPlan
from .pruning import Exhaustive, PruningPlan, Sample
from .zoo import parse_variant


class PlanError(Exception):
    """Plan file problem; the message starts with the offending key path."""


_SCHEMA = {
    "dataset": {"name": True, "root": False, "train_subset": False,
                "subset_seed": False},
    "model": {"variant": True},
    "pretrain": {"epochs": True, "batch_size": True, "momentum": True,
                 "weight_decay": True, "lr_schedule": True},
    "retrain": {"epochs": True, "batch_size": True, "momentum": True,
                "weight_decay": True, "lr_schedule": True},
    "pruning": {"ratios": True, "mode": True, "max_exhaustive": False},
    "analysis": {"repeats": True, "base_seed": True, "retrain_fraction": False},
}


def _parse_int(section: str, key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise PlanError(f"{section}.{key}: expected an integer, got '{text}'") from exc


def _parse_float(section: str, key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise PlanError(f"{section}.{key}: expected a number, got '{text}'") from exc


def parse_lr_schedule(text: str):
    """``"0:1e-2, 20:1e-3"`` -> ((0, 0.01), (20, 0.001))."""
    milestones = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        epoch_text, sep, rate_text = item.partition(":")
        if not sep:
            raise ValueError(f"milestone '{item}' is not '<epoch>:<rate>'")
        milestones.append((int(epoch_text), float(rate_text)))
    if not milestones:
        raise ValueError("empty schedule")
    return tuple(milestones)


def format_lr_schedule(schedule) -> str:
    return ", ".join(f"{e}:{r!r}" for e, r in schedule)


def parse_ratios(text: str):
    """``"[0.5, 0, 0.5]"`` (brackets optional) -> (0.5, 0.0, 0.5)."""
    inner = text.strip()
    if inner.startswith("[") and inner.endswith("]"):
        inner = inner[1:-1]
    parts = [p.strip() for p in inner.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty ratio list")
    return tuple(float(p) for p in parts)


def _read_sections(text: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise PlanError(f"unparseable plan file: {exc}") from exc
    if parser.defaults():
        raise PlanError("unknown section 'DEFAULT'")
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    for name in sections:
        if name not in _SCHEMA:
            raise PlanError(f"unknown section '{name}'")
    for name, keys in _SCHEMA.items():
        if name not in sections:
            raise PlanError(f"missing section '{name}'")
        for key in sections[name]:
            if key not in keys:
                raise PlanError(f"unknown key '{name}.{key}'")
        for key, required in keys.items():
            if required and key not in sections[name]:
                raise PlanError(f"missing key '{name}.{key}'")
    return sections


def _train_config(section: str, kv: dict[str, str]) -> TrainConfig:
    try:
        schedule = parse_lr_schedule(kv["lr_schedule"])
    except ValueError as exc:
        raise PlanError(f"{section}.lr_schedule: {exc}") from exc
    try:
        return TrainConfig(
            epochs=_parse_int(section, "epochs", kv["epochs"]),
            batch_size=_parse_int(section, "batch_size", kv["batch_size"]),
            momentum=_parse_float(section, "momentum", kv["momentum"]),
            weight_decay=_parse_float(section, "weight_decay", kv["weight_decay"]),
            lr_schedule=schedule,
        )
    except ValueError as exc:
        raise PlanError(f"{section}: {exc}") from exc


def parse_plan_text(text: str) -> ExperimentPlan:
    sections = _read_sections(text)
    ds, model = sections["dataset"], sections["model"]
    pruning_kv, analysis = sections["pruning"], sections["analysis"]

    try:
        variant = parse_variant(model["variant"])
    except ValueError as exc:
        raise PlanError(f"model.variant: {exc}") from exc

    try:
        ratios = parse_ratios(pruning_kv["ratios"])
    except ValueError as exc:
        raise PlanError(f"pruning.ratios: {exc}") from exc

    mode_text = pruning_kv["mode"].strip()
    if mode_text == "exhaustive":
        mode = Exhaustive()
    elif mode_text.startswith("sample:"):
        parts = mode_text.split(":")
        if len(parts) != 3:
            raise PlanError(
                f"pruning.mode: expected 'sample:<count>:<seed>', got '{mode_text}'"
            )
        mode = Sample(count=_parse_int("pruning", "mode", parts[1]),
                      seed=_parse_int("pruning", "mode", parts[2]))
    else:
        raise PlanError(
            f"pruning.mode: expected 'exhaustive' or 'sample:<count>:<seed>', "
            f"got '{mode_text}'"
        )

    kwargs = {}
    if "max_exhaustive" in pruning_kv:
        kwargs["max_exhaustive"] = _parse_int("pruning", "max_exhaustive",
                                              pruning_kv["max_exhaustive"])
    try:
        pruning = PruningPlan(layer_ratios=ratios, mode=mode, **kwargs)
    except Exception as exc:
        raise PlanError(f"pruning: {exc}") from exc

    try:
        return ExperimentPlan(
            dataset=ds["name"].strip(),
            variant=variant,
            pretrain=_train_config("pretrain", sections["pretrain"]),
            retrain=_train_config("retrain", sections["retrain"]),
            pruning=pruning,
            repeats=_parse_int("analysis", "repeats", analysis["repeats"]),
            base_seed=_parse_int("analysis", "base_seed", analysis["base_seed"]),
            retrain_fraction=_parse_float(
                "analysis", "retrain_fraction",
                analysis.get("retrain_fraction", "1.0")),
            data_root=ds.get("root", "").strip() or None,
            train_subset=(_parse_int("dataset", "train_subset", ds["train_subset"])
                          if "train_subset" in ds else None),
            subset_seed=_parse_int("dataset", "subset_seed",
                                   ds.get("subset_seed", "0")),
        )
    except ValueError as exc:
        raise PlanError(str(exc)) from exc


def parse_plan(path) -> ExperimentPlan:
    path = Path(path)
    if not path.exists():
        raise PlanError(f"plan file not found: {path}")
    return parse_plan_text(path.read_text(encoding="utf-8"))


def serialize_plan(plan: ExperimentPlan) -> str:
    """Canonical text form; parsing it reproduces the plan exactly."""
    lines = ["[dataset]", f"name = {plan.dataset}"]
    if plan.data_root:
        lines.append(f"root = {plan.data_root}")
    if plan.train_subset is not None:
        lines.append(f"train_subset = {plan.train_subset}")
    lines += [f"subset_seed = {plan.subset_seed}", "", "[model]",
              f"variant = {plan.variant.name}", ""]
    for section, cfg in (("pretrain", plan.pretrain), ("retrain", plan.retrain)):
        lines += [
            f"[{section}]",
            f"epochs = {cfg.epochs}",
            f"batch_size = {cfg.batch_size}",
            f"momentum = {cfg.momentum!r}",
            f"weight_decay = {cfg.weight_decay!r}",
            f"lr_schedule = {format_lr_schedule(cfg.lr_schedule)}",
            "",
        ]
    mode = plan.pruning.mode
    mode_text = ("exhaustive" if isinstance(mode, Exhaustive)
                 else f"sample:{mode.count}:{mode.seed}")
    lines += [
        "[pruning]",
        f"ratios = [{', '.join(repr(r) for r in plan.pruning.layer_ratios)}]",
        f"mode = {mode_text}",
        f"max_exhaustive = {plan.pruning.max_exhaustive}",
        "",
        "[analysis]",
        f"repeats = {plan.repeats}",
        f"base_seed = {plan.base_seed}",
        f"retrain_fraction = {plan.retrain_fraction!r}",
    ]
    return "\n".join(lines) + "\n"
