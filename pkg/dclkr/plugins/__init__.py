"""
Plugin system for the dclkr command line.
Each plugin is a self-contained module that registers one or more subcommands.
"""
import argparse
import sys
from abc import ABC, abstractmethod
from typing import List, Tuple

import pandas as pd

from dclkr import config


class Plugin(ABC):
    """Base class for all plugins."""

    @property
    @abstractmethod
    def name(self) -> str:
        """Plugin name for logging."""
        pass

    @property
    def commands(self) -> List[Tuple[str, str]]:
        """List of (command, description) tuples.
        Each command gets its own subparser, passed to register()."""
        return []

    @abstractmethod
    def register(self, parser: argparse.ArgumentParser) -> None:
        """Add subcommand-specific arguments."""
        pass

    @abstractmethod
    def run(self, args: argparse.Namespace) -> None:
        """Execute the subcommand. Raise dclkr errors; the app maps them to exit codes."""
        pass


def resolve_seed(args: argparse.Namespace) -> int:
    return args.seed if args.seed is not None else config.SEED


def resolve_format(args: argparse.Namespace) -> str:
    return args.format or config.OUT_FORMAT


def write_frame(frame: pd.DataFrame, args: argparse.Namespace) -> None:
    """Tabular result to --out or stdout, as CSV or a JSON list of rows."""
    out = args.out or sys.stdout
    if resolve_format(args) == "json":
        frame.to_json(out, orient="records", indent=2)
        if out is sys.stdout:
            sys.stdout.write("\n")
    else:
        frame.to_csv(out, index=False, lineterminator="\n", float_format="%.10g")


# Import plugins for convenience
from dclkr.plugins.sweep import SweepPlugin, RunPlugin
from dclkr.plugins.diagnose import DiagnosePlugin
from dclkr.plugins.distill_demo import DistillDemoPlugin
from dclkr.plugins.oracle_check import OracleCheckPlugin

__all__ = [
    'Plugin',
    'SweepPlugin',
    'RunPlugin',
    'DiagnosePlugin',
    'DistillDemoPlugin',
    'OracleCheckPlugin',
]
