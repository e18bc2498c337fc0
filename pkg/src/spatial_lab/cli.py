"""Command-line driver: run verification experiments and write CSV reports"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .config import EXPERIMENTS, ExperimentConfig, load_config
from .descriptors import write_report
from .errors import DescriptorError, LabError
from .experiments import Report, run_experiment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BAD_INPUT = 2

DEFAULT_LOG_FILE = Path("logs/lab.log")


def configure_logging(level: str = "INFO", log_file: Path | None = None) -> None:
    handlers: list[logging.Handler] = [RichHandler(rich_tracebacks=True, show_path=False)]
    if log_file is not None:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
        handlers.append(file_handler)
    logging.basicConfig(level=level.upper(), format="%(message)s", handlers=handlers, force=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spatial_lab",
        description="Numerical checks for spatial product systems of Hilbert bimodules",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Examples:\n"
        "  python -m spatial_lab --experiment suite --seed 42 --out reports/suite.csv\n"
        "  python -m spatial_lab --experiment decompose-tuple 3 1 2 2 1\n"
        "  python -m spatial_lab --view reports/suite.csv",
    )
    parser.add_argument("--config", type=Path, help="JSON experiment config")
    parser.add_argument("--experiment", choices=EXPERIMENTS, help="experiment to run (overrides the config)")
    parser.add_argument("--seed", type=int, help="seed for randomized instances")
    parser.add_argument("--out", type=Path, help="CSV report path")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument(
        "--log-file", nargs="?", const=DEFAULT_LOG_FILE, type=Path, help=f"also log to a file (default {DEFAULT_LOG_FILE})"
    )
    parser.add_argument("--view", type=Path, metavar="REPORT", help="browse a CSV report in the terminal viewer")
    parser.add_argument("tuple", nargs="*", type=float, help="time tuple for decompose-tuple")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.experiment:
        changes["experiment"] = args.experiment
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    if args.tuple:
        changes["options"] = {**config.options, "tuple": list(args.tuple)}
    return replace(config, **changes) if changes else config


def run(config: ExperimentConfig) -> Report:
    """Execute the configured experiment and write its report when an output path is set"""
    report = run_experiment(config)
    if config.out is not None:
        write_report(report.records(), config.out)
    return report


def print_summary(report: Report, console: Console | None = None) -> None:
    console = console or Console()
    table = Table(title=f"{report.experiment}: {len(report.rows) - len(report.failures)}/{len(report.rows)} passed")
    table.add_column("theorem", style="cyan", no_wrap=True)
    table.add_column("assertion")
    table.add_column("residual", justify="right")
    table.add_column("tolerance", justify="right")
    table.add_column("pass", justify="center")
    for row in report.rows:
        mark = "[bold green]PASS[/bold green]" if row.passed else "[bold red]FAIL[/bold red]"
        table.add_row(row.theorem, row.assertion, f"{row.residual:.3e}", f"{row.tolerance:.1e}", mark)
    console.print(table)
    for note in report.notes:
        console.print(f"[dim]{note}[/dim]")


def view(path: Path) -> int:
    from .viewer import ReportApp

    ReportApp(path).run()
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_file)
    try:
        if args.view is not None:
            return view(args.view)
        config = config_from_args(args)
        report = run(config)
    except DescriptorError as e:
        logger.error(f"bad input: {e}")
        return EXIT_BAD_INPUT
    except (LabError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_BAD_INPUT if isinstance(e, ValueError) else EXIT_FAILED
    except Exception:
        logger.exception("experiment crashed")
        return EXIT_FAILED

    print_summary(report)
    if not report.passed:
        logger.info(f"{len(report.failures)} assertion(s) failed")
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
