"""Command-line interface.

Usage:
    costtest test --data data.csv --response y [--model linear] [--weight hybrid] [--out results]
    costtest test --replay results/report.json
    costtest simulate study.json [--out results/simulation.csv] [--jobs 4]

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import get_args

import structlog
from pydantic import ValidationError

from costtest.config import settings
from costtest.errors import (
    ConfigurationError,
    DataError,
    DimensionError,
    HarnessError,
    NumericError,
    UnderdeterminedError,
)
from costtest.log import configure_logging
from costtest.schemas.options import (
    FitOptions,
    ModelFamily,
    ModelSpec,
    SplitMode,
    SplitOptions,
    WeightKind,
    WeightSpec,
)
from costtest.schemas.report import DataProvenance, RunRecord, TestRunConfig, TestSummary
from costtest.services.datasets import (
    LoadedTable,
    ResultsTable,
    append_run,
    load_beta,
    load_csv,
    load_simulate_file,
    read_report,
    write_residuals,
)
from costtest.services.harness import run_grid
from costtest.services.models import make_model
from costtest.services.statistic import cost_statistic

UTC = timezone.utc

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

REPORT_NAME = "report.json"


class CostArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> CostArgumentParser:
    parser = CostArgumentParser(
        prog="costtest", description="Conditionally studentized specification test"
    )
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    parser.add_argument("--json-logs", action="store_true", help="Render log events as JSON")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CostArgumentParser)

    test = sub.add_parser("test", help="Test a parametric model on a CSV dataset")
    test.add_argument("--data", help="CSV file with a header row")
    test.add_argument("--response", help="Response column name or 0-based index")
    test.add_argument("--model", choices=get_args(ModelFamily), default="linear")
    test.add_argument("--p", type=int, default=None, help="Number of blocks (block families)")
    test.add_argument("--beta-file", help="Fixed direction for fixed_direction_polynomial")
    test.add_argument("--weight", choices=get_args(WeightKind), default="hybrid")
    test.add_argument("--c", type=float, default=1.0, help="Bandwidth constant, h = c*n^-0.2")
    test.add_argument("--scale", type=float, default=1.0, help="Constant weight multiplier")
    test.add_argument(
        "--normalize",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Divide the coordinate kernel sum by q (default on for kernel_sum/hybrid)",
    )
    test.add_argument("--split-frac", type=float, default=0.25, help="Fraction of rows in N2")
    test.add_argument("--split-mode", choices=get_args(SplitMode), default="seeded_shuffle")
    test.add_argument("--seed", type=int, default=0, help="Split seed")
    test.add_argument("--sided", choices=["one", "two"], default="two")
    test.add_argument("--max-iterations", type=int, default=200)
    test.add_argument("--starts", type=int, default=1, help="Number of NLS starting points")
    test.add_argument("--start-scale", type=float, default=1.0)
    test.add_argument("--out", default=None, help="Output directory (default OUTPUT_DIR)")
    test.add_argument("--replay", help="Re-run the last configuration recorded in a report file")
    test.set_defaults(handler=cmd_test)

    simulate = sub.add_parser("simulate", help="Run Monte Carlo studies from a JSON config")
    simulate.add_argument("config", help="JSON study config (object or array)")
    simulate.add_argument(
        "--out", default=None, help="Results CSV (default OUTPUT_DIR/simulation.csv)"
    )
    simulate.add_argument("--jobs", type=int, default=None, help="joblib workers (default N_JOBS)")
    simulate.set_defaults(handler=cmd_simulate)
    return parser


def _config_from_args(args: argparse.Namespace, table: LoadedTable) -> TestRunConfig:
    q = table.dataset.q
    beta = load_beta(args.beta_file) if args.beta_file else None
    return TestRunConfig(
        data=table.path,
        response=table.response,
        model=ModelSpec(family=args.model, q=q, p=args.p, beta=beta),
        weight=WeightSpec(
            kind=args.weight, c=args.c, normalize_by_q=args.normalize, scale=args.scale
        ),
        split=SplitOptions(fraction_n2=args.split_frac, mode=args.split_mode, seed=args.seed),
        fit=FitOptions(
            max_iterations=args.max_iterations, n_starts=args.starts, start_scale=args.start_scale
        ),
        sided=args.sided,
    )


def cmd_test(args: argparse.Namespace) -> int:
    out_dir = Path(args.out or settings.OUTPUT_DIR)

    if args.replay:
        previous = read_report(args.replay)
        if not previous.runs:
            raise ConfigurationError(f"{args.replay}: report has no runs to replay")
        config = previous.runs[-1].config
        table = load_csv(config.data, config.response)
        if table.dataset.q != config.model.q:
            raise DataError(
                f"{config.data}: now has q={table.dataset.q}, report recorded q={config.model.q}"
            )
    else:
        table = load_csv(args.data, args.response)
        config = _config_from_args(args, table)

    data = table.dataset
    model = make_model(config.model)
    result = cost_statistic(model, data, config.weight, config.split, config.fit)

    report_path = out_dir / REPORT_NAME
    run_index = len(read_report(report_path).runs) + 1
    fitted = model.mean(result.theta_hat_full, data.predictors)
    residuals_path = write_residuals(
        out_dir / f"residuals_{run_index:03d}.csv", fitted, data.responses - fitted
    )

    record = RunRecord(
        created_at=datetime.now(UTC),
        model_label=model.label,
        config=config,
        data=DataProvenance(
            path=table.path,
            n=data.n,
            q=data.q,
            response=table.response,
            predictors=table.predictors,
        ),
        result=TestSummary(
            statistic=result.statistic,
            numerator=result.numerator,
            conditional_sd=result.conditional_sd,
            p_value=result.p_value(config.sided),
            p_value_two_sided=result.p_value_two_sided,
            p_value_one_sided=result.p_value_one_sided,
            n1=result.split.n1,
            n2=result.split.n2,
            split_mode=result.split.mode,
            split_seed=result.split.seed,
            bandwidth=result.bandwidth_used,
            theta_hat_1=result.theta_hat_1.tolist(),
            theta_hat_2=result.theta_hat_2.tolist(),
            theta_hat_full=result.theta_hat_full.tolist(),
            fit_converged=list(result.fit_converged),
        ),
        residuals_csv=str(residuals_path),
        residual_count=data.n,
    )
    append_run(report_path, record)

    logger.info(
        "test_finished",
        model=model.label,
        statistic=result.statistic,
        p_value=record.result.p_value,
        report=str(report_path),
    )
    print(f"model:      {model.label}")
    print(f"n1, n2:     {result.split.n1}, {result.split.n2}")
    print(f"statistic:  {result.statistic:.4f}")
    print(f"p-value:    {record.result.p_value:.4f} ({config.sided}-sided)")
    if not result.converged:
        print("warning:    a parameter fit hit the iteration limit")
    print(f"report:     {report_path}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    configs = load_simulate_file(args.config)
    out_path = Path(args.out) if args.out else Path(settings.OUTPUT_DIR) / "simulation.csv"

    table = ResultsTable(out_path)
    for result in run_grid(configs, n_jobs=args.jobs):
        table.append(result.as_row())
        cfg = result.config
        print(
            f"{cfg.study} n={cfg.n} q={cfg.q} a={cfg.a:g} {cfg.sigma_kind}: "
            f"rate={result.rejection_rate:.3f} (se {result.mc_standard_error:.3f}, "
            f"failures {result.failures})"
        )
    logger.info("simulate_finished", rows=table.rows, out=str(out_path))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "test" and not args.replay and not (args.data and args.response):
        parser.error("test: --data and --response are required unless --replay is given")
    configure_logging(level=args.log_level, json=True if args.json_logs else None)

    try:
        return args.handler(args)
    except (ConfigurationError, DimensionError, ValidationError) as exc:
        print(f"costtest: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"costtest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, UnderdeterminedError, HarnessError) as exc:
        print(f"costtest: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
