"""Command line entry point: ``penreg run --config experiment.yaml``.

Exit status: 0 on success, 1 for configuration or data errors, 2 for
numerical failures.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import DataError, NumericalError, PenregError
from .harness import ExperimentConfig, emit_report, report_dict, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="penreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the replication and write its report")
    run.add_argument("--config", help="flat key/value YAML or JSON config file")
    run.add_argument("--data", help="CSV with the two-year recidivism data")
    run.add_argument("--models", help="comma-separated subset of lasso,ridge,elastic_net,logistic,compas")
    run.add_argument("--iterations", type=int)
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--alpha", type=float, help="elastic net mixing parameter")
    run.add_argument("--folds", type=int, help="cross-validation folds")
    run.add_argument("--lambda-rule", choices=("one_se", "min"))
    run.add_argument("--out", help="output directory")
    run.add_argument("--workers", type=int, help="worker processes for the iteration loop")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    models = None
    if args.models is not None:
        models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    return cfg.replace(
        data_path=args.data,
        models=models,
        iterations=args.iterations,
        master_seed=args.seed,
        pinned_alpha=args.alpha,
        k_folds=args.folds,
        lambda_rule=args.lambda_rule,
        output_dir=args.out,
        workers=args.workers,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config(args)
        report = run_experiment(cfg)
        paths = emit_report(report, cfg.output_dir)
    except NumericalError as e:
        print(f"penreg: numerical failure: {e}", file=sys.stderr)
        return 2
    except (PenregError, DataError, FileNotFoundError, OSError) as e:
        print(f"penreg: {e}", file=sys.stderr)
        return 1

    summary = report_dict(report)
    print(f"config {report.config_hash}, seed {cfg.master_seed}, {report.n_records} records")
    if report.compas_full_accuracy is not None:
        print(f"  COMPAS (full data)  {100 * report.compas_full_accuracy:.1f}%")
    for m, a in report.accuracy.items():
        print(f"  {m:<18} {100 * a.mean:.1f}% (sd {100 * a.sd:.1f})")
    for m, r in summary["representative"].items():
        print(f"  {m:<18} lambda={r['lambda_selected']:.4g} AUC={r['auc']:.4f} dropped={r['dropped']}")
    print(f"wrote {len(paths)} files to {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
