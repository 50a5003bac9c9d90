"""Application entrypoint."""

import logging
import sys

import structlog
import torch

from lssdm.cli.app import run
from lssdm.config import get_settings


def configure_logging() -> None:
    """Configure structured logging on stderr; stdout is left to command output."""
    settings = get_settings()

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.StackInfoRenderer(),
            structlog.dev.set_exc_info,
            structlog.processors.TimeStamper(fmt="iso"),
            (structlog.dev.ConsoleRenderer() if not settings.log_json else structlog.processors.JSONRenderer()),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            getattr(logging, settings.log_level.upper(), logging.INFO)
        ),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=True,
    )


def configure_torch() -> None:
    """Single-threaded, deterministic CPU kernels."""
    torch.set_num_threads(get_settings().torch_threads)
    torch.use_deterministic_algorithms(True)


def main() -> None:
    """Run the command line."""
    configure_logging()
    configure_torch()

    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
