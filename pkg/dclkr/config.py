"""Configuration for dclkr."""
import configparser
import logging
import os
from pathlib import Path

from dclkr.core.errors import ConfigError


def _env_int(name: str, default: str):
    # Left as the raw string when malformed so validate_config() can report it.
    raw = os.environ.get(name, default)
    try:
        return int(raw)
    except ValueError:
        return raw


SEED = _env_int("DCLKR_SEED", "0")
WORKERS = _env_int("DCLKR_WORKERS", "1")
LOG_LEVEL = os.environ.get("DCLKR_LOG_LEVEL", "INFO").upper()
DATABASE_URL = os.environ.get("DCLKR_DATABASE_URL")
OUT_FORMAT = os.environ.get("DCLKR_OUT_FORMAT", "csv")

SWEEP_SECTION = "sweep"
SWEEP_KEYS = {
    "task", "algorithms", "m_values", "repetitions", "seed", "test_size", "beta",
    "alpha_n0", "n_per_party", "eta", "local_iters", "schedule", "noise_sd",
    "truncation", "timing", "trace", "workers",
}
ALGORITHM_KEYS = {"c", "d", "eta", "rounds"}


def validate_config():
    if not isinstance(SEED, int) or not 0 <= SEED < 2**64:
        raise ConfigError(f"DCLKR_SEED must be an unsigned 64-bit integer, got {SEED!r}")
    if not isinstance(WORKERS, int) or WORKERS < 1:
        raise ConfigError(f"DCLKR_WORKERS must be an integer of at least 1, got {WORKERS!r}")
    if OUT_FORMAT not in ("csv", "json"):
        raise ConfigError(f"DCLKR_OUT_FORMAT must be csv or json, got {OUT_FORMAT!r}")
    if not isinstance(logging.getLevelName(LOG_LEVEL), int):
        raise ConfigError(f"Unknown DCLKR_LOG_LEVEL: {LOG_LEVEL}")


def read_config_file(path: str | Path) -> dict[str, dict[str, str]]:
    """Sections of an INI experiment file as plain string dicts.

    Unknown sections or keys are configuration errors so typos do not pass silently.
    """
    from dclkr.core.sweep import ALGORITHMS

    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    except configparser.Error as e:
        raise ConfigError(f"Malformed config file {path}: {e}") from e

    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        keys = set(parser[section])
        if section == SWEEP_SECTION:
            allowed = SWEEP_KEYS
        elif section in ALGORITHMS:
            allowed = ALGORITHM_KEYS
        else:
            raise ConfigError(f"Unknown section [{section}] in {path}")
        unknown = keys - allowed
        if unknown:
            raise ConfigError(f"Unknown keys in [{section}]: {', '.join(sorted(unknown))}")
        out[section] = dict(parser[section])
    return out
