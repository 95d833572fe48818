import argparse
import json
import logging
import os
import sys
import typing


from dotenv import load_dotenv
from pydantic import ValidationError


from curloc import __version__
from curloc.errors import ConfigError, InputError, RunError
from curloc.evaluation.metrics import summarize
from curloc.evaluation.predictions import read_predictions
from curloc.runner.config import build_overrides, config_schema, load_config
from curloc.runner.experiment import run_experiment, run_sweep
from curloc.runner.plotdata import DEFAULT_SMOOTHING_WINDOW, emit_plotdata
from curloc.runner.recipes import RECIPES
from curloc.scheduler import DecayKind
from curloc.tracker import RefreshStrategy
from curloc.utils.logging import (
    console,
    setup_console_logging,
    setup_log_filter,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_BAD_INPUT = 2

RATIO_OVERFLOW_MESSAGE = "Ratio overflow"


def add_logging_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--log-level",
        type=str,
        default=None,
        help="Console log level (default: $CURLOC_LOG_LEVEL or INFO).",
    )
    parser.add_argument(
        "--quiet-overflow",
        action="store_true",
        default=False,
        help="Drop ratio-overflow warnings from the console.",
    )


def add_run_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        "--manifest",
        dest="config",
        type=str,
        default=None,
        help="YAML/JSON config file, or the manifest.json of a previous run.",
    )
    parser.add_argument(
        "--seed",
        type=int,
        nargs="+",
        default=None,
        help="Seed list, overrides the config.",
    )
    parser.add_argument(
        "--schedule",
        type=str,
        choices=[kind.value for kind in DecayKind],
        default=None,
    )
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument(
        "--window", type=int, default=None, help="Window size N."
    )
    parser.add_argument(
        "--refresh",
        type=str,
        choices=[strategy.value for strategy in RefreshStrategy],
        default=None,
    )
    parser.add_argument(
        "--out", type=str, default=None, help="Output directory."
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=1,
        help="Seeds trained concurrently in worker processes.",
    )
    add_logging_args(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curloc",
        description="Curriculum reward scheduling for GRPO box grounding.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Train every seed.")
    add_run_args(run_parser)

    sweep_parser = subparsers.add_parser(
        "sweep", help="Train every variant of an ablation recipe."
    )
    sweep_parser.add_argument(
        "--recipe", type=str, choices=sorted(RECIPES), required=True
    )
    add_run_args(sweep_parser)

    eval_parser = subparsers.add_parser(
        "eval", help="Score a JSONL prediction file."
    )
    eval_parser.add_argument("predictions", type=str)
    add_logging_args(eval_parser)

    plot_parser = subparsers.add_parser(
        "plotdata", help="Long-format plot data from run traces."
    )
    plot_parser.add_argument("traces", type=str, nargs="+")
    plot_parser.add_argument("--out", type=str, required=True)
    plot_parser.add_argument(
        "--smoothing",
        type=int,
        default=DEFAULT_SMOOTHING_WINDOW,
        help="Moving-average window of the reward series.",
    )
    plot_parser.add_argument(
        "--label",
        type=str,
        action="append",
        default=None,
        help="Series label per trace, in order.",
    )
    add_logging_args(plot_parser)

    subparsers.add_parser("schema", help="Print the config JSON schema.")
    return parser


def report_validation_error(error: ValidationError) -> None:
    console.print(
        f"[red]Invalid configuration ({error.error_count()} errors):[/red]"
    )
    for detail in error.errors():
        location = ".".join(str(part) for part in detail["loc"]) or "config"
        console.print(
            f"  {location}: {detail['msg']}", markup=False, soft_wrap=True
        )


def _run(args: argparse.Namespace) -> int:
    overrides = build_overrides(
        seeds=args.seed,
        schedule=args.schedule,
        steps=args.steps,
        window=args.window,
        refresh=args.refresh,
        out=args.out,
    )
    config = load_config(args.config, overrides)
    if args.command == "sweep":
        run_sweep(args.recipe, config, args.workers)
    else:
        run_experiment(config, args.workers)
    return EXIT_OK


def _eval(args: argparse.Namespace) -> int:
    records = read_predictions(args.predictions)
    print(json.dumps(summarize(records)))
    return EXIT_OK


def _plotdata(args: argparse.Namespace) -> int:
    emit_plotdata(args.traces, args.out, args.smoothing, args.label)
    logger.info(f"Plot data written to {args.out}")
    return EXIT_OK


def main(argv: typing.Optional[list[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)

    if args.command == "schema":
        print(config_schema())
        return EXIT_OK

    setup_console_logging(
        args.log_level or os.getenv("CURLOC_LOG_LEVEL", "INFO")
    )
    if args.quiet_overflow:
        setup_log_filter(RATIO_OVERFLOW_MESSAGE)

    commands: dict[str, typing.Callable[[argparse.Namespace], int]] = {
        "run": _run,
        "sweep": _run,
        "eval": _eval,
        "plotdata": _plotdata,
    }
    try:
        return commands[args.command](args)
    except ValidationError as e:
        report_validation_error(e)
        return EXIT_BAD_INPUT
    except (ConfigError, InputError, OSError) as e:
        console.print(str(e), style="red", markup=False, soft_wrap=True)
        return EXIT_BAD_INPUT
    except RunError as e:
        logger.error(f"Run failed at {e}")
        return EXIT_RUN_FAILED


if __name__ == "__main__":
    sys.exit(main())
