"""Command-line orchestration."""
import argparse
import logging
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence

from dclkr.core.errors import AcceptanceError, ConfigError, CoverageError

if TYPE_CHECKING:
    from dclkr.plugins import Plugin

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COVERAGE = 3
EXIT_ACCEPTANCE = 4


def float_list(value: str) -> List[float]:
    try:
        out = [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}")
    if not out:
        raise argparse.ArgumentTypeError("expected at least one number")
    return out


def shared_arguments(defaults) -> argparse.ArgumentParser:
    """Flags every subcommand accepts. ``defaults`` is the env-driven config module."""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", metavar="PATH", help="INI experiment file")
    parent.add_argument("--seed", type=int, default=None, help=f"base seed (env default {defaults.SEED})")
    parent.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    parent.add_argument("--format", choices=("csv", "json"), default=None,
                        help=f"output format (env default {defaults.OUT_FORMAT})")
    parent.add_argument("--beta", type=float, default=None, help="public-input tilt in (0, 1]")
    parent.add_argument("--alpha-n0", type=float_list, default=None,
                        help="public-count multiplier; sweep accepts a comma list")
    parent.add_argument("--workers", type=int, default=None, help="parallel runs")
    parent.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    return parent


class BenchApp:
    def __init__(self, defaults, prog: str = "dclkr"):
        self.defaults = defaults
        self.prog = prog
        self.parser: Optional[argparse.ArgumentParser] = None
        self._plugins: List['Plugin'] = []
        self._handlers: Dict[str, 'Plugin'] = {}

    def register_plugin(self, plugin: 'Plugin') -> None:
        self._plugins.append(plugin)
        logger.debug(f"Registered plugin: {plugin.name}")

    def setup(self) -> argparse.ArgumentParser:
        self.parser = argparse.ArgumentParser(
            prog=self.prog,
            description="Distillation-based collaborative kernel regression simulator.",
        )
        subparsers = self.parser.add_subparsers(dest="command", metavar="COMMAND")
        subparsers.required = True
        parent = shared_arguments(self.defaults)
        for plugin in self._plugins:
            for command, description in plugin.commands:
                sub = subparsers.add_parser(command, help=description, description=description,
                                            parents=[parent])
                plugin.register(sub)
                sub.set_defaults(command=command)
                self._handlers[command] = plugin
            logger.debug(f"Plugin '{plugin.name}' commands registered")
        return self.parser

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        if not self.parser:
            self.setup()
        try:
            args = self.parser.parse_args(argv)  # type: ignore[union-attr]
        except SystemExit as e:
            return EXIT_OK if e.code in (0, None) else EXIT_CONFIG
        if args.log_level:
            level = logging.getLevelName(args.log_level.upper())
            if not isinstance(level, int):
                logger.error(f"Unknown log level: {args.log_level}")
                return EXIT_CONFIG
            logging.getLogger().setLevel(level)

        plugin = self._handlers[args.command]
        try:
            plugin.run(args)
        except CoverageError as e:
            logger.error(f"{args.command}: {e} (m={e.m}, seed={e.seed})")
            return EXIT_COVERAGE
        except AcceptanceError as e:
            logger.error(f"{args.command}: {e}")
            return EXIT_ACCEPTANCE
        except ConfigError as e:
            logger.error(f"{args.command}: {e}")
            return EXIT_CONFIG
        return EXIT_OK
