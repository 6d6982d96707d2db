"""Command-line entry point.

Subcommands::

    prune-audit pretrain <plan.ini> [--workdir DIR]
    prune-audit sweep    <plan.ini> [--workdir DIR] [--workers N] [--fresh]
    prune-audit analyze  <registry-or-csv> --metric acc|loss [--out DIR]
    prune-audit report   <analysis-dir>
    prune-audit criteria <checkpoint.ckpt> [--method l1|taylor] [...]

Exit codes: 0 success, 2 validation error, 3 runtime failure.  The
``PRUNE_AUDIT_DATA`` environment variable points at the dataset root when
a plan does not name one.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analytics, harness, report
from .criteria import CriteriaError, score_l1_filters, score_taylor1
from .data.dataset import batch_iter
from .engine import load_checkpoint
from .plan import PlanError, parse_plan
from .pruning import PruningError

VALIDATION_ERRORS = (PlanError, PruningError, CriteriaError, ValueError)


def _load_points(path: Path):
    """Registry lines or an outcome CSV -> (points, excluded count)."""
    head = ""
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                head = line
                break
    if head.startswith("combination="):
        records = list(harness.read_registry(path).values())
        return harness.records_to_points(records), records
    return (analytics.read_points_csv(path), 0), None


def _cmd_pretrain(args) -> int:
    plan = parse_plan(args.plan)
    path = harness.pretrain(plan, args.workdir)
    print(f"checkpoint: {path}")
    return 0


def _cmd_sweep(args) -> int:
    plan = parse_plan(args.plan)
    records = harness.sweep(plan, args.workdir, workers=args.workers,
                            resume=not args.fresh)
    failed = sum(1 for r in records if r.status != "ok")
    print(f"{len(records)} combinations recorded in "
          f"{Path(args.workdir) / harness.REGISTRY_NAME}"
          + (f" ({failed} failed)" if failed else ""))
    return 0


def _cmd_analyze(args) -> int:
    (points, excluded), _ = _load_points(Path(args.registry))
    rep = analytics.analyze(points, metric=args.metric, excluded=excluded)
    out = Path(args.out or Path(args.registry).with_suffix("")).with_suffix("")
    out.mkdir(parents=True, exist_ok=True)
    label = args.label or Path(args.registry).stem
    primary = rep.kendall_accuracy if args.metric == analytics.ACCURACY else rep.kendall_loss
    payload = {
        "label": label,
        "ratio": args.ratio,
        "metric": rep.metric,
        "n": rep.n,
        "tau": primary.tau,
        "p_value": primary.p_value,
        "concordant": primary.concordant,
        "discordant": primary.discordant,
        "method": primary.method,
        "tau_accuracy": rep.kendall_accuracy.tau,
        "p_accuracy": rep.kendall_accuracy.p_value,
        "tau_loss": rep.kendall_loss.tau,
        "p_loss": rep.kendall_loss.p_value,
        "anomaly_ratio": rep.anomaly_ratio,
        "counterexample_ratio": rep.counterexample_ratio,
        "counterexamples": len(rep.counterexample_pairs),
        "verdict": rep.verdict,
        "oracle_combination": rep.oracle_combination,
        "excluded": rep.excluded,
    }
    (out / "analysis.json").write_text(json.dumps(payload, indent=2) + "\n",
                                       encoding="utf-8")
    report.emit_scatter(points, args.metric, out / "scatter", title=label)
    print(f"{label}: n={rep.n} tau={primary.tau:.2f} p={primary.p_value:.1e} "
          f"anomaly={rep.anomaly_ratio:.1%} "
          f"counterexamples={len(rep.counterexample_pairs)}/"
          f"{rep.n * (rep.n - 1) // 2} verdict={rep.verdict}"
          + (f" excluded={rep.excluded}" if rep.excluded else ""))
    print(f"wrote {out}/analysis.json, scatter.csv, scatter.svg")
    return 0


def _cmd_report(args) -> int:
    root = Path(args.analysis_dir)
    files = sorted(root.glob("**/analysis.json"))
    if not files:
        raise ValueError(f"no analysis.json files under {root}")
    entries = []
    for f in files:
        d = json.loads(f.read_text(encoding="utf-8"))
        result = analytics.KendallResult(
            tau=d["tau"], concordant=d["concordant"], discordant=d["discordant"],
            n=d["n"], p_value=d["p_value"], method=d["method"],
        )
        entries.append(report.SummaryEntry(
            label=d["label"], ratio=d.get("ratio"), result=result,
            verdict=d["verdict"],
        ))
    text, csv_text = report.emit_summary(entries)
    (root / "summary.csv").write_text(csv_text, encoding="utf-8")
    print(text, end="")
    print(f"wrote {root / 'summary.csv'}")
    return 0


def _cmd_criteria(args) -> int:
    state = load_checkpoint(args.checkpoint)
    if args.method == "l1":
        scores = score_l1_filters(state)
    else:
        plan = parse_plan(args.plan) if args.plan else None
        if plan is None:
            raise ValueError("--method taylor needs --plan for the scoring batch")
        split = harness.load_datasets(plan)
        images, labels = next(batch_iter(split.train, args.batch_size))
        scores = score_taylor1(state, images, labels)
    lines = ["layer_id,unit_id,score"]
    for layer_id, values in scores.per_layer:
        lines += [f"{layer_id},{unit},{value!r}"
                  for unit, value in enumerate(values.tolist())]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prune-audit",
                                     description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pretrain", help="train and persist the dense network")
    p.add_argument("plan")
    p.add_argument("--workdir", default="runs")
    p.set_defaults(fn=_cmd_pretrain)

    p = sub.add_parser("sweep", help="run every pruning combination")
    p.add_argument("plan")
    p.add_argument("--workdir", default="runs")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true", default=True,
                   help="skip combinations already in the registry (default)")
    p.add_argument("--fresh", action="store_true",
                   help="ignore an existing registry instead of resuming")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("analyze", help="correlation analytics over a registry or CSV")
    p.add_argument("registry")
    p.add_argument("--metric", choices=["acc", "loss"], default="acc")
    p.add_argument("--out", default=None)
    p.add_argument("--label", default=None)
    p.add_argument("--ratio", type=float, default=None)
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("report", help="summary table over analyze outputs")
    p.add_argument("analysis_dir")
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("criteria", help="per-layer importance score table")
    p.add_argument("checkpoint")
    p.add_argument("--method", choices=["l1", "taylor"], default="l1")
    p.add_argument("--plan", default=None,
                   help="plan supplying the scoring batch (taylor only)")
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_criteria)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
