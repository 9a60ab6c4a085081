"""Command line entry points.

Exit codes: 0 success, 1 gradient-check failure, 2 configuration error,
3 data error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dataset import DataConfig
from .errors import ConfigError, DataError
from .evolution import ExperimentPlan, StopRule, SweepConfig, run_combo, \
    run_experiment_sweep
from .mating import MODE_TAGGED, MODE_UNTAGGED
from .nnet import TrainerConfig, grad_check
from .report import read_metrics_csv, render_scatter_svg, render_series_svg
from .synthesis import (INIT_GEOMETRIC, INIT_RAW_PRODUCT, ZERO_ALIVE_ONLY,
                        ZERO_LITERAL)


def _add_plan_args(parser):
    parser.add_argument("--mode", choices=(MODE_TAGGED, MODE_UNTAGGED),
                        default=MODE_TAGGED)
    parser.add_argument("--r", type=float, default=0.7,
                        help="resource level for both survival stages")
    parser.add_argument("--r-cluster", type=float, default=None,
                        help="override cluster-stage resource level")
    parser.add_argument("--r-synapse", type=float, default=None,
                        help="override synapse-stage resource level")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--generations", type=int, default=8)
    parser.add_argument("--population", type=int, default=5)
    parser.add_argument("--parents", type=int, default=5)
    parser.add_argument("--min-parent-fraction", type=float, default=0.6)
    parser.add_argument("--zero-mode",
                        choices=(ZERO_LITERAL, ZERO_ALIVE_ONLY),
                        default=ZERO_LITERAL)
    parser.add_argument("--weight-init",
                        choices=(INIT_GEOMETRIC, INIT_RAW_PRODUCT),
                        default=INIT_GEOMETRIC)
    parser.add_argument("--no-stop", action="store_true",
                        help="run all generations even at floor accuracy")
    parser.add_argument("--data", choices=("blobs", "mnist"), default="blobs")
    parser.add_argument("--data-dir", default=None)
    parser.add_argument("--train-fraction", type=float, default=None,
                        help="stratified fraction of the train split")
    parser.add_argument("--epochs", type=int, default=1)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--learning-rate", type=float, default=0.05)
    parser.add_argument("--momentum", type=float, default=0.9)


def _plan_from_args(args) -> ExperimentPlan:
    return ExperimentPlan(
        mode=args.mode,
        r_cluster=args.r if args.r_cluster is None else args.r_cluster,
        r_synapse=args.r if args.r_synapse is None else args.r_synapse,
        seed=args.seed,
        population_size=args.population,
        generations=args.generations,
        parent_count=args.parents,
        min_parent_fraction=args.min_parent_fraction,
        zero_mode=args.zero_mode,
        weight_init=args.weight_init,
        trainer=TrainerConfig(learning_rate=args.learning_rate,
                              momentum=args.momentum, epochs=args.epochs,
                              batch_size=args.batch_size),
        data=DataConfig(source=args.data, data_dir=args.data_dir,
                        train_fraction=args.train_fraction),
        stop=StopRule(enabled=not args.no_stop))


def _cmd_run(args) -> int:
    plan = _plan_from_args(args)
    out = Path(args.out)
    if out.exists():
        out.unlink()
    rows = run_combo(plan, csv_path=out)
    best = max(r.accuracy for r in rows)
    print(f"{plan.experiment_id}: {len(rows)} rows, best accuracy {best:.4f}")
    print(f"wrote {out}")
    return 0


def _parse_list(text, cast):
    return tuple(cast(part) for part in text.split(",") if part)


def _cmd_sweep(args) -> int:
    sweep = SweepConfig(modes=_parse_list(args.modes, str),
                        r_values=_parse_list(args.r_values, float),
                        seeds=_parse_list(args.seeds, int),
                        base_plan=_plan_from_args(args))
    manifest = run_experiment_sweep(sweep, args.out_dir, workers=args.workers)
    print(f"{len(manifest['combos'])} combos written to {args.out_dir}")
    return 0


def _cmd_plot(args) -> int:
    rows = []
    for pattern in args.csv:
        matches = sorted(Path().glob(pattern)) or [Path(pattern)]
        for path in matches:
            rows.extend(read_metrics_csv(path))
    if not rows:
        raise DataError("no metrics rows found")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    targets = {
        out_dir / "accuracy_series.svg":
            lambda p: render_series_svg(rows, p, "accuracy"),
        out_dir / "storage_series.svg":
            lambda p: render_series_svg(rows, p, "storage_bytes"),
        out_dir / "scatter.svg": lambda p: render_scatter_svg(rows, p),
    }
    for path, render in targets.items():
        render(path)
        print(f"wrote {path}")
    return 0


def _cmd_gradcheck(args) -> int:
    report = grad_check(seed_root=args.seed,
                        samples_per_group=args.samples,
                        tolerance=args.tolerance,
                        perturb_group=args.perturb_group,
                        perturb_scale=args.perturb_scale)
    for group in sorted(report.group_rel_errors):
        print(f"{group}: rel_err={report.group_rel_errors[group]:.3e} "
              f"samples={report.group_samples[group]}")
    print(f"skipped {report.skipped_kinks} kink-crossing samples")
    verdict = "PASSED" if report.passed else "FAILED"
    print(f"gradient check {verdict} (tolerance {report.tolerance:g})")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evosynth",
        description="Multi-parent evolutionary synthesis of micro conv nets")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment combination")
    _add_plan_args(p_run)
    p_run.add_argument("--out", default="metrics.csv")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a mode x resources x seed grid")
    _add_plan_args(p_sweep)
    p_sweep.add_argument("--modes", default=f"{MODE_TAGGED},{MODE_UNTAGGED}")
    p_sweep.add_argument("--r-values", default="0.5,0.7,0.95")
    p_sweep.add_argument("--seeds", default="1,2,3")
    p_sweep.add_argument("--out-dir", default="sweep_out")
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_plot = sub.add_parser("plot", help="render SVG figures from metrics CSVs")
    p_plot.add_argument("csv", nargs="+",
                        help="metrics CSV paths or glob patterns")
    p_plot.add_argument("--out-dir", default=".")
    p_plot.set_defaults(func=_cmd_plot)

    p_grad = sub.add_parser("gradcheck",
                            help="check analytic gradients by differences")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--samples", type=int, default=3)
    p_grad.add_argument("--tolerance", type=float, default=1e-4)
    p_grad.add_argument("--perturb-group", default=None)
    p_grad.add_argument("--perturb-scale", type=float, default=1.0)
    p_grad.set_defaults(func=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
