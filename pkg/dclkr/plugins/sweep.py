"""Sweep plugin: the full (m, repetition) experiment grid."""
import argparse
import logging
import sys
from typing import List, Optional

from dclkr import config
from dclkr.core.errors import ConfigError
from dclkr.core.sweep import (
    ALGORITHMS,
    RunRecord,
    SweepConfig,
    run_single,
    run_sweep,
    summarize,
    summary_payload,
    sweep_config_from_sources,
)
from dclkr.plugins import Plugin, resolve_format
from dclkr.storage import RecordStore

logger = logging.getLogger(__name__)


def _int_list(value: str) -> tuple:
    try:
        return tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")


def _names(value: str) -> tuple:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--task", choices=("toy1d", "toy3d"), default=None)
    parser.add_argument("--algorithms", type=_names, default=None,
                        help=f"comma list from {', '.join(ALGORITHMS)}")
    parser.add_argument("--n-per-party", type=int, default=None, help="n = n_per_party * m")
    parser.add_argument("--test-size", type=int, default=None)
    parser.add_argument("--local-iters", type=int, default=None, help="DCL-KR local steps E")
    parser.add_argument("--schedule", choices=("rounds", "split"), default=None)
    parser.add_argument("--noise-sd", type=float, default=None)
    parser.add_argument("--trace", action="store_true", default=None,
                        help="emit one record per DCL-KR round")
    parser.add_argument("--timing", action="store_true", default=None,
                        help="fill wall_ms (output is then not reproducible)")


def build_config(args: argparse.Namespace, alpha_n0: Optional[float] = None, **extra) -> SweepConfig:
    """Built-in defaults < environment < --config file < command-line flags."""
    sections = config.read_config_file(args.config) if args.config else {}
    defaults = {"seed": config.SEED, "workers": config.WORKERS}
    overrides = dict(
        task=args.task,
        algorithms=args.algorithms,
        n_per_party=args.n_per_party,
        test_size=args.test_size,
        local_iters=args.local_iters,
        schedule=args.schedule,
        noise_sd=args.noise_sd,
        trace=args.trace,
        timing=args.timing,
        seed=args.seed,
        beta=args.beta,
        alpha_n0=alpha_n0,
        workers=args.workers,
        **extra,
    )
    return sweep_config_from_sources(sections, overrides, defaults)


def emit_records(store: RecordStore, args: argparse.Namespace, summary: Optional[dict] = None) -> None:
    out = args.out or sys.stdout
    store.write(out, resolve_format(args), summary)
    if args.out:
        logger.info(f"Wrote {len(store)} records to {args.out}")
    if config.DATABASE_URL:
        from dclkr.storage.analytics import init_database, create_tables, log_records
        if init_database(config.DATABASE_URL):
            create_tables()
            logger.info(f"Stored {log_records(store.records())} records in the database")


def log_summary(records: List[RunRecord], label: str = "") -> dict:
    summaries = summarize(records)
    for name, s in summaries.items():
        means = ", ".join(f"m={m}: {v:.5f}" for m, v in s.mean_rmse.items())
        slope = f"{s.fit.slope:.3f}" if s.fit else "n/a"
        logger.info(f"{label}{name}: mean rmse {means}; log-log slope {slope}")
    return summary_payload(summaries)


class SweepPlugin(Plugin):
    @property
    def name(self) -> str:
        return "sweep"

    @property
    def commands(self):
        return [("sweep", "Run every algorithm over the m grid with repeated seeds")]

    def register(self, parser: argparse.ArgumentParser) -> None:
        add_experiment_arguments(parser)
        parser.add_argument("--m-values", type=_int_list, default=None, help="comma list of party counts")
        parser.add_argument("--repetitions", type=int, default=None)

    def run(self, args: argparse.Namespace) -> None:
        alphas = args.alpha_n0 or [None]
        store = RecordStore()
        summaries = {}
        for alpha in alphas:
            cfg = build_config(args, alpha, m_values=args.m_values, repetitions=args.repetitions)
            label = "" if len(alphas) == 1 else f"[alpha_n0={cfg.alpha_n0:g}] "
            records = run_sweep(cfg)
            store.extend(records)
            summaries[f"{cfg.alpha_n0:g}"] = log_summary(records, label)
        store.set_metadata("alpha_n0", [float(k) for k in summaries])
        summary = next(iter(summaries.values())) if len(summaries) == 1 else summaries
        emit_records(store, args, summary)


class RunPlugin(Plugin):
    @property
    def name(self) -> str:
        return "run"

    @property
    def commands(self):
        return [("run", "Run the configured algorithms once for a single m and seed")]

    def register(self, parser: argparse.ArgumentParser) -> None:
        add_experiment_arguments(parser)
        parser.add_argument("--m", type=int, required=True, help="number of parties")

    def run(self, args: argparse.Namespace) -> None:
        if args.alpha_n0 and len(args.alpha_n0) > 1:
            raise ConfigError("run takes a single --alpha-n0 value")
        alpha = args.alpha_n0[0] if args.alpha_n0 else None
        cfg = build_config(args, alpha, m_values=(args.m,), repetitions=1)
        store = RecordStore()
        store.extend(run_single(cfg, args.m, cfg.seed))
        store.set_metadata("alpha_n0", [cfg.alpha_n0])
        emit_records(store, args, log_summary(store.records()))
