"""Command-line interface."""

from lssdm.cli.app import build_parser, run

__all__ = ["build_parser", "run"]
