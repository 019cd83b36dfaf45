#!/usr/bin/env python3
"""
RegretLab Command-Line Interface.

Provides:
- regretlab run: Run an experiment config
- regretlab fig2: Regret scalar and output Fisher information over a gain grid
- regretlab tradeoff: Trade-off identity on a prior over a gain grid
- regretlab bounds: Regret against every bound for a deviation grid
- regretlab efficiency: Blind gain estimator against the Cramer-Rao bound
- regretlab validate: Check an experiment config, or print its schema

Exit codes: 0 success, 1 config or usage error, 2 bound violation with --strict.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from decologr import Logger as log

from regretlab.core.blindest import EstimatorKind, GainEstimator
from regretlab.harness.config import (
    AHatKind,
    AHatRule,
    ExperimentConfig,
    ExperimentKind,
    FIG2_GRID,
    expand_grid,
    load_config,
    parse_prior,
    schema_text,
)
from regretlab.harness.experiments import any_violation, run
from regretlab.harness.results import meta_line, rows_to_json, write_csv, write_json
from regretlab.errors import ConfigInvalidError, RegretLabError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VIOLATION = 2

DEFAULT_GAINS = "0.2,0.5,1,2,5"


class UsageError(Exception):
    """Bad command-line usage."""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1 and a schema hint."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        print("Run 'regretlab validate --schema' for the experiment config schema.", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as ex:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from ex


def _quiet(args):
    """Suppress logging for JSON output."""
    if getattr(args, "json", False):
        logging.getLogger().setLevel(logging.ERROR)


def _prior(text: str):
    try:
        return parse_prior(text)
    except (ValueError, RegretLabError) as ex:
        raise ConfigInvalidError([f"prior: {ex}"]) from ex


def _execute(config: ExperimentConfig, args) -> int:
    """Run config, write its outputs and map the outcome to an exit code."""
    rows = run(config)
    csv_path = getattr(args, "out", None) or config.output_csv
    json_path = getattr(args, "json_out", None) or config.output_json
    config_dict = config.to_dict()
    if csv_path:
        meta = None if args.no_meta else meta_line(config_dict)
        write_csv(rows, csv_path, meta=meta)
    if json_path:
        write_json(rows, json_path, config_dict)

    violated = any_violation(rows)
    failed = sum(1 for r in rows if r.error)
    if args.json:
        print(json.dumps(rows_to_json(rows, config_dict), indent=2))
    else:
        print(f"{config.kind.value}: {len(rows)} rows, {failed} failed, bound violations: {'yes' if violated else 'no'}")
        if csv_path:
            print(f"CSV: {csv_path}")
        if json_path:
            print(f"JSON: {json_path}")
    if args.strict and violated:
        log.warning("Bound violation with --strict")
        return EXIT_VIOLATION
    return EXIT_OK


def run_config(args) -> int:
    """Run an experiment config file."""
    _quiet(args)
    config = load_config(args.config)
    if args.workers:
        config = replace(config, workers=args.workers)
    return _execute(config, args)


def fig2(args) -> int:
    """Regret scalar and output Fisher information at a fixed SNR."""
    _quiet(args)
    prior = _prior(args.prior)
    config = ExperimentConfig(
        kind=ExperimentKind.FIG2,
        prior=prior,
        noise_var=prior.variance / 10.0 ** (args.snr_db / 10.0),
        a_grid=expand_grid(args.start, args.stop, args.step),
        experiment_id=args.id or f"fig2-{args.snr_db:g}dB",
        workers=args.workers,
    )
    return _execute(config, args)


def tradeoff(args) -> int:
    """Trade-off identity over a gain grid."""
    _quiet(args)
    config = ExperimentConfig(
        kind=ExperimentKind.TRADEOFF,
        prior=_prior(args.prior),
        noise_var=args.noise_var,
        a_grid=tuple(args.gains),
        experiment_id=args.id or "tradeoff",
        workers=args.workers,
    )
    return _execute(config, args)


def bounds(args) -> int:
    """Regret and bounds on a relative or fixed deviation grid."""
    _quiet(args)
    config = ExperimentConfig(
        kind=ExperimentKind.BOUNDS,
        prior=_prior(args.prior),
        noise_var=args.noise_var,
        a_grid=tuple(args.gains),
        a_hat_rule=AHatRule(kind=AHatKind(args.rule), offsets=tuple(args.offsets)),
        experiment_id=args.id or "bounds",
        slack_coefficient=args.slack,
        workers=args.workers,
    )
    return _execute(config, args)


def efficiency(args) -> int:
    """Blind estimator efficiency and expected regret."""
    _quiet(args)
    config = ExperimentConfig(
        kind=ExperimentKind.EFFICIENCY,
        prior=_prior(args.prior),
        noise_var=args.noise_var,
        a_grid=tuple(args.gains),
        a_hat_rule=AHatRule(
            kind=AHatKind.FROM_ESTIMATOR,
            estimator=GainEstimator(kind=EstimatorKind(args.estimator)),
            n=args.n,
        ),
        experiment_id=args.id or "efficiency",
        trials=args.trials,
        seed=args.seed,
        workers=args.workers,
    )
    return _execute(config, args)


def validate(args) -> int:
    """Validate a config file or print the schema."""
    if args.schema:
        print(schema_text())
        return EXIT_OK
    if not args.config:
        raise UsageError("validate needs a config path or --schema")
    config = load_config(args.config)
    if args.json:
        print(json.dumps({"valid": True, "config": config.to_dict()}, indent=2))
    else:
        print(f"{args.config}: valid {config.kind.value} config, {config.row_count} rows")
    return EXIT_OK


def _add_output_options(parser: argparse.ArgumentParser, out_required: bool = False):
    parser.add_argument("--out", "-o", type=Path, required=out_required, help="CSV output path")
    parser.add_argument("--json-out", type=Path, help="JSON output path")
    parser.add_argument("--no-meta", action="store_true", help="Omit the '# regretlab' meta line")
    parser.add_argument("--strict", action="store_true", help="Exit 2 when any bound flag is false")
    parser.add_argument("--workers", type=int, help="Work pool size (default: CPU count)")
    parser.add_argument("--id", help="Experiment id written into every row")
    parser.add_argument("--json", action="store_true", help="Print rows as JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="regretlab",
        description="RegretLab - mismatched MMSE regret on the gain-uncertain Gaussian channel",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to execute", parser_class=_Parser)

    run_parser = subparsers.add_parser("run", help="Run an experiment config")
    run_parser.add_argument("config", type=Path, help="Experiment config (JSON)")
    _add_output_options(run_parser)
    run_parser.set_defaults(func=run_config)

    fig2_parser = subparsers.add_parser("fig2", help="rho(a) and I(Y;a) over a gain grid")
    fig2_parser.add_argument("--snr-db", type=float, default=10.0, help="SNR in dB (default: 10)")
    fig2_parser.add_argument("--prior", default="unit-gaussian", help="Prior spec (default: unit-gaussian)")
    fig2_parser.add_argument("--start", type=float, default=FIG2_GRID[0], help="First gain")
    fig2_parser.add_argument("--stop", type=float, default=FIG2_GRID[1], help="Last gain")
    fig2_parser.add_argument("--step", type=float, default=FIG2_GRID[2], help="Gain step")
    _add_output_options(fig2_parser, out_required=True)
    fig2_parser.set_defaults(func=fig2)

    tradeoff_parser = subparsers.add_parser("tradeoff", help="(rho + 1) I(Y;a) against the SNR")
    tradeoff_parser.add_argument("--prior", required=True, help="Prior spec or registry name")
    tradeoff_parser.add_argument("--noise-var", type=float, default=1.0, help="Noise variance")
    tradeoff_parser.add_argument("--gains", type=_floats, default=_floats(DEFAULT_GAINS), help="Comma-separated gains")
    _add_output_options(tradeoff_parser, out_required=True)
    tradeoff_parser.set_defaults(func=tradeoff)

    bounds_parser = subparsers.add_parser("bounds", help="Regret against every bound")
    bounds_parser.add_argument("--prior", default="unit-gaussian", help="Prior spec or registry name")
    bounds_parser.add_argument("--noise-var", type=float, default=1.0, help="Noise variance")
    bounds_parser.add_argument("--gains", type=_floats, default=_floats(DEFAULT_GAINS), help="Comma-separated gains")
    bounds_parser.add_argument(
        "--rule",
        choices=[AHatKind.RELATIVE_OFFSET.value, AHatKind.FIXED_OFFSET.value],
        default=AHatKind.RELATIVE_OFFSET.value,
        help="How offsets map a to a_hat",
    )
    bounds_parser.add_argument("--offsets", type=_floats, default=_floats("1e-3,1e-2"), help="Comma-separated offsets")
    bounds_parser.add_argument("--slack", type=float, default=1.0, help="Slack coefficient c")
    _add_output_options(bounds_parser)
    bounds_parser.set_defaults(func=bounds)

    efficiency_parser = subparsers.add_parser("efficiency", help="Blind estimator against the Cramer-Rao bound")
    efficiency_parser.add_argument("--prior", default="unit-gaussian", help="Prior spec or registry name")
    efficiency_parser.add_argument("--noise-var", type=float, default=1.0, help="Noise variance")
    efficiency_parser.add_argument("--gains", type=_floats, default=_floats("1"), help="Comma-separated gains")
    efficiency_parser.add_argument("--n", type=int, default=10_000, help="Block length n (n - 1 past outputs)")
    efficiency_parser.add_argument("--trials", type=int, default=500, help="Monte Carlo trials")
    efficiency_parser.add_argument("--seed", type=int, default=0, help="Base seed")
    efficiency_parser.add_argument(
        "--estimator",
        choices=[k.value for k in EstimatorKind],
        default=EstimatorKind.NUMERICAL_MLE.value,
        help="Gain estimator",
    )
    _add_output_options(efficiency_parser)
    efficiency_parser.set_defaults(func=efficiency)

    validate_parser = subparsers.add_parser("validate", help="Validate an experiment config")
    validate_parser.add_argument("config", nargs="?", type=Path, help="Experiment config (JSON)")
    validate_parser.add_argument("--schema", action="store_true", help="Print the config schema")
    validate_parser.add_argument("--json", action="store_true", help="Output in JSON format")
    validate_parser.set_defaults(func=validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return int(ex.code or 0)

    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return 130
    except ConfigInvalidError as ex:
        print(f"Error: {ex}", file=sys.stderr)
        for diagnostic in ex.diagnostics:
            print(f"  - {diagnostic}", file=sys.stderr)
        if getattr(args, "json", False):
            print(json.dumps({"error": str(ex), "diagnostics": ex.diagnostics}, indent=2))
        return EXIT_CONFIG
    except (UsageError, ValueError) as ex:
        print(f"Error: {ex}", file=sys.stderr)
        print("Run 'regretlab validate --schema' for the experiment config schema.", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as ex:
        print(f"Error: {ex}", file=sys.stderr)
        if getattr(args, "json", False):
            print(json.dumps({"error": str(ex)}, indent=2))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
