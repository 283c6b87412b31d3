#!/usr/bin/env python3
"""
dclkr - distillation-based collaborative kernel regression simulator.
"""
import logging
import sys

from dclkr import config
from dclkr.core import BenchApp
from dclkr.core.errors import ConfigError
from dclkr.plugins import SweepPlugin, RunPlugin, DiagnosePlugin, DistillDemoPlugin, OracleCheckPlugin

# Configure logging
logging.basicConfig(
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    level=logging.INFO,
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)


def build_app() -> BenchApp:
    app = BenchApp(config)
    app.register_plugin(SweepPlugin())
    app.register_plugin(RunPlugin())
    app.register_plugin(DiagnosePlugin())
    app.register_plugin(DistillDemoPlugin())
    app.register_plugin(OracleCheckPlugin())
    return app


def main(argv=None) -> int:
    try:
        config.validate_config()
    except ConfigError as e:
        logger.error(str(e))
        return 2
    logging.getLogger().setLevel(config.LOG_LEVEL)
    return build_app().run(argv)


if __name__ == "__main__":
    sys.exit(main())
