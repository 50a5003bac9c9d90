"""Command-line parser and dispatch."""

import argparse
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import structlog
from pydantic import ValidationError

from lssdm import __version__
from lssdm.cli import commands
from lssdm.cli.gradcheck import COMPONENTS, format_table, run_gradcheck
from lssdm.config import RunConfig, load_run_config, merge_overrides, parse_overrides
from lssdm.domain.errors import LssdmError, NumericError

logger = structlog.get_logger()

COMMANDS: dict[str, tuple[Callable[[RunConfig], Path], str]] = {
    "synth": (commands.cmd_synth, "Generate a synthetic dataset and its sensor graph"),
    "mask": (commands.cmd_mask, "Write the evaluation mask selected by [mask]"),
    "train": (commands.cmd_train, "Train a model and write a checkpoint"),
    "impute": (commands.cmd_impute, "Fill the empty cells of a dataset CSV"),
    "eval": (commands.cmd_eval, "Score a checkpoint on the test split"),
    "latent-dump": (commands.cmd_latent_dump, "Write averaged latent moments per mask rate"),
    "sweep": (commands.cmd_sweep, "Train and evaluate across mask rates"),
}


def _common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", type=Path, help="TOML run config")
    parent.add_argument("--seed", type=int, help="Run seed")
    parent.add_argument("--out", type=Path, help="Output directory (default runs/<timestamp>-seed<seed>)")
    parent.add_argument("--workers", type=int, help="Sampler threads")
    parent.add_argument("--checkpoint", type=Path, help="Checkpoint directory")
    parent.add_argument("--n-samples", type=int, help="Imputation samples per window")
    parent.add_argument("--trace", action="store_true", default=None, help="Write the per-step sampler trace")
    parent.add_argument(
        "--set",
        dest="assignments",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override one config value (repeatable)",
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per pipeline stage."""
    parser = argparse.ArgumentParser(prog="lssdm", description="Probabilistic time-series imputation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()
    for name, (_, help_text) in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=help_text)
    gradcheck = subparsers.add_parser("gradcheck", parents=[common], help="Compare analytic and numeric gradients")
    gradcheck.add_argument("--corrupt", choices=COMPONENTS, help=argparse.SUPPRESS)
    return parser


def flag_overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Nested overrides from ``--set`` with the dedicated flags on top."""
    flags: dict[str, Any] = {}
    if args.seed is not None:
        flags["seed"] = args.seed
    if args.out is not None:
        flags["out_dir"] = args.out
    if args.workers is not None:
        flags["workers"] = args.workers
    if args.checkpoint is not None:
        flags["checkpoint"] = args.checkpoint
    if args.trace:
        flags["trace"] = True
    if args.n_samples is not None:
        flags["eval"] = {"n_samples": args.n_samples}
    return merge_overrides(parse_overrides(args.assignments), flags)


def _gradcheck(config: RunConfig, corrupt: str | None) -> int:
    rows = run_gradcheck(config.seed, corrupt)
    print(format_table(rows))
    failed = [row.component for row in rows if not row.passed]
    if failed:
        logger.error("Gradient check failed", components=failed)
        return NumericError.exit_code
    return 0


def run(argv: Sequence[str]) -> int:
    """Parse ``argv``, run the command and return the process exit code."""
    args = build_parser().parse_args(list(argv))
    log = logger.bind(command=args.command)
    try:
        config = load_run_config(args.config, flag_overrides(args))
        if args.command == "gradcheck":
            return _gradcheck(config, args.corrupt)
        handler, _ = COMMANDS[args.command]
        out = handler(config)
    except LssdmError as e:
        log.error("Command failed", error=str(e), error_type=e.error_type, exit_code=e.exit_code)
        return e.exit_code
    except ValidationError as e:
        log.error("Invalid configuration", error=str(e), error_type="config", exit_code=1)
        return 1
    except OSError as e:
        log.error("I/O error", error=str(e), error_type="io", exit_code=2)
        return 2
    log.info("Command finished", out=str(out))
    return 0
