"""Seeded experiment runs: data generation, every algorithm, RMSE records.

DCL-KR's D constant counts communication rounds by default (schedule
"rounds"): the iteration count and the round count share one tuning table,
and D=2.5 with E=5 local steps spends about as many gradient steps per
party as central GD's D=15. Schedule "split" divides the count by E instead.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from dclkr.core.dataset import PartyDataset
from dclkr.core.datagen import (
    DEFAULT_NOISE_SD,
    DEFAULT_TRUNCATION,
    PartitionSpec,
    TaskSpec,
    TaskVariant,
    partition_noniid,
    public_count_rule,
    sample_public,
    sample_task,
    spawn_rngs,
)
from dclkr.core.diagnostics import SlopeFit, fit_loglog_slope
from dclkr.core.errors import ConfigError, CoverageError
from dclkr.core.kernels import KernelSpec, RkhsFunction
from dclkr.core.protocols import FederationConfig, dc_ny, dcl_kr, dkrr_ny_cm, evaluate_rmse
from dclkr.core.solvers import kernel_gd, krr_closed_form

logger = logging.getLogger(__name__)

ALGORITHMS = ("central-krgd", "central-krr", "dc-ny", "dcl-kr", "dkrr-ny-cm")
FINAL = "final"


@dataclass(frozen=True)
class AlgorithmParams:
    """C scales lambda = C n^(-1/(2r+s)); D scales T = int(D n^(1/(2r+s)))."""

    C: float | None = None
    D: float | None = None
    eta: float | None = None
    rounds: int | None = None


# Grid-searched constants for the kernel-machine experiments.
DEFAULT_PARAMS: dict[TaskVariant, dict[str, AlgorithmParams]] = {
    TaskVariant.TOY1D: {
        "central-krr": AlgorithmParams(C=0.055),
        "central-krgd": AlgorithmParams(D=15, eta=0.5),
        "dc-ny": AlgorithmParams(C=0.006),
        "dkrr-ny-cm": AlgorithmParams(C=0.008, eta=0.01, rounds=10),
        "dcl-kr": AlgorithmParams(D=2.5, eta=0.5),
    },
    TaskVariant.TOY3D: {
        "central-krr": AlgorithmParams(C=0.016),
        "central-krgd": AlgorithmParams(D=50, eta=0.5),
        "dc-ny": AlgorithmParams(C=0.002),
        "dkrr-ny-cm": AlgorithmParams(C=0.005, eta=0.01, rounds=10),
        "dcl-kr": AlgorithmParams(D=12.5, eta=0.5),
    },
}


@dataclass
class SweepConfig:
    task: TaskSpec
    algorithms: tuple[str, ...] = ALGORITHMS
    m_values: tuple[int, ...] = (10, 20, 40, 80)
    n_per_party: int = 50
    alpha_n0: float = 1.0
    beta: float = 1.0
    params: dict[str, AlgorithmParams] = field(default_factory=dict)
    local_iters: int = 5
    schedule: str = "rounds"
    repetitions: int = 20
    seed: int = 0
    test_size: int = 2000
    trace: bool = False
    timing: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ConfigError(f"Unknown algorithms: {sorted(unknown)}; choose from {', '.join(ALGORITHMS)}")
        if not self.m_values or any(m < 1 for m in self.m_values):
            raise ConfigError(f"m values must be positive, got {self.m_values}")
        if self.n_per_party < 1:
            raise ConfigError(f"n_per_party must be positive, got {self.n_per_party}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be at least 1, got {self.repetitions}")
        if self.test_size < 1:
            raise ConfigError(f"test_size must be positive, got {self.test_size}")
        if self.local_iters < 1:
            raise ConfigError(f"local_iters must be at least 1, got {self.local_iters}")
        if self.schedule not in ("rounds", "split"):
            raise ConfigError(f"schedule must be 'rounds' or 'split', got {self.schedule!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError(f"beta must lie in (0, 1], got {self.beta}")
        if not self.alpha_n0 > 0:
            raise ConfigError(f"alpha_n0 must be positive, got {self.alpha_n0}")
        merged = dict(DEFAULT_PARAMS[self.task.variant])
        for name, override in self.params.items():
            base = merged.get(name, AlgorithmParams())
            merged[name] = replace(
                base, **{k: v for k, v in vars(override).items() if v is not None}
            )
        self.params = merged

    def param(self, algorithm: str) -> AlgorithmParams:
        return self.params[algorithm]


@dataclass(frozen=True)
class RunRecord:
    algorithm: str
    m: int
    n: int
    n0: int
    seed: int
    round: int | str
    rmse: float
    wall_ms: float | None = None

    def __post_init__(self) -> None:
        if not self.rmse >= 0:
            raise ConfigError(f"rmse must be nonnegative, got {self.rmse}")

    def sort_key(self) -> tuple:
        order = float("inf") if self.round == FINAL else float(self.round)
        return (self.algorithm, self.m, self.seed, order)


@dataclass
class RunContext:
    """Everything one (m, seed) run shares across algorithms."""

    task: TaskSpec
    kernel: KernelSpec
    m: int
    seed: int
    pool: PartyDataset
    parties: list[PartyDataset]
    Z: np.ndarray
    test: PartyDataset
    cfg: SweepConfig

    @property
    def n(self) -> int:
        return self.pool.n

    @property
    def n0(self) -> int:
        return self.Z.shape[0]

    def regularization(self, algorithm: str) -> float:
        C = self.cfg.param(algorithm).C
        if C is None:
            raise ConfigError(f"{algorithm} needs a C constant")
        return C * self.n ** (-self.task.rate_exponent)

    def iterations(self, algorithm: str) -> int:
        D = self.cfg.param(algorithm).D
        if D is None:
            raise ConfigError(f"{algorithm} needs a D constant")
        return int(D * self.n**self.task.rate_exponent)


def build_context(cfg: SweepConfig, m: int, seed: int) -> RunContext:
    """Generate the pool, partition, public inputs and test set for one run.

    Four independent Philox streams keyed by (seed, m) keep every piece
    reproducible on its own.
    """
    task = cfg.task
    pool_rng, part_rng, public_rng, test_rng = spawn_rngs(seed, 4, m)
    n = cfg.n_per_party * m
    pool = sample_task(task, n, pool_rng)
    try:
        parties = partition_noniid(pool, m, PartitionSpec.for_task(task), part_rng)
    except CoverageError as e:
        e.m, e.seed = m, seed
        raise
    empty = [i for i, p in enumerate(parties) if p.n == 0]
    if empty:
        logger.warning(f"m={m} seed={seed}: {len(empty)} parties received no data and sit out")
        parties = [p for p in parties if p.n > 0]
    n0 = public_count_rule(n, task.r, task.s, cfg.alpha_n0)
    Z = sample_public(n0, cfg.beta, task.dim, public_rng)
    test = sample_task(replace(task, noise_sd=0.0), cfg.test_size, test_rng)
    return RunContext(task, task.kernel(), m, seed, pool, parties, Z, test, cfg)


Solver = Callable[[RunContext], tuple[RkhsFunction, np.ndarray | None]]


def _central_krr(ctx: RunContext):
    return krr_closed_form(ctx.kernel, ctx.pool, ctx.regularization("central-krr")), None


def _central_krgd(ctx: RunContext):
    p = ctx.cfg.param("central-krgd")
    return kernel_gd(ctx.kernel, ctx.pool, p.eta, ctx.iterations("central-krgd")), None


def _dc_ny(ctx: RunContext):
    return dc_ny(ctx.parties, ctx.Z, ctx.kernel, ctx.regularization("dc-ny")), None


def _dkrr_ny_cm(ctx: RunContext):
    p = ctx.cfg.param("dkrr-ny-cm")
    f = dkrr_ny_cm(
        ctx.parties, ctx.Z, ctx.kernel, ctx.regularization("dkrr-ny-cm"),
        eta=p.eta if p.eta is not None else 0.01,
        T=p.rounds if p.rounds is not None else 10,
    )
    return f, None


def dcl_kr_rounds(ctx: RunContext) -> int:
    """Communication rounds for DCL-KR under the configured schedule."""
    p = ctx.cfg.param("dcl-kr")
    if p.rounds is not None:
        return p.rounds
    T = ctx.iterations("dcl-kr")
    if ctx.cfg.schedule == "split":
        T //= ctx.cfg.local_iters
    return max(T, 1)


def _dcl_kr(ctx: RunContext):
    p = ctx.cfg.param("dcl-kr")
    fed = FederationConfig.for_parties(
        ctx.parties, ctx.Z, ctx.kernel,
        E=ctx.cfg.local_iters, T=dcl_kr_rounds(ctx), eta=p.eta, seed=ctx.seed,
    )
    f, trace = dcl_kr(ctx.parties, fed, test=ctx.test if ctx.cfg.trace else None)
    return f, trace.rmse if ctx.cfg.trace else None


SOLVERS: dict[str, Solver] = {
    "central-krr": _central_krr,
    "central-krgd": _central_krgd,
    "dc-ny": _dc_ny,
    "dkrr-ny-cm": _dkrr_ny_cm,
    "dcl-kr": _dcl_kr,
}


def run_single(cfg: SweepConfig, m: int, seed: int) -> list[RunRecord]:
    """Run every configured algorithm once on freshly generated data."""
    ctx = build_context(cfg, m, seed)
    records = []
    for algorithm in cfg.algorithms:
        start = time.perf_counter()
        f, round_rmse = SOLVERS[algorithm](ctx)
        wall_ms = (time.perf_counter() - start) * 1000.0 if cfg.timing else None
        rmse = evaluate_rmse(f, ctx.test)
        common = dict(algorithm=algorithm, m=m, n=ctx.n, n0=ctx.n0, seed=seed)
        if round_rmse is not None:
            records.extend(
                RunRecord(**common, round=t + 1, rmse=float(r)) for t, r in enumerate(round_rmse)
            )
        records.append(RunRecord(**common, round=FINAL, rmse=rmse, wall_ms=wall_ms))
        logger.info(f"{algorithm} m={m} seed={seed} n={ctx.n} n0={ctx.n0} rmse={rmse:.5f}")
    return records


def run_sweep(cfg: SweepConfig) -> list[RunRecord]:
    """All (m, repetition) runs, in canonical (algorithm, m, seed, round) order.

    Repetition r runs with seed ``cfg.seed + r``.
    """
    jobs = [(m, cfg.seed + rep) for m in cfg.m_values for rep in range(cfg.repetitions)]
    logger.info(f"Sweep: {len(jobs)} runs, algorithms={','.join(cfg.algorithms)}")
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
            batches = list(executor.map(lambda job: run_single(cfg, *job), jobs))
    else:
        batches = [run_single(cfg, *job) for job in jobs]
    records = [record for batch in batches for record in batch]
    return sorted(records, key=RunRecord.sort_key)


@dataclass
class AlgorithmSummary:
    algorithm: str
    mean_rmse: dict[int, float]
    n_values: dict[int, int]
    fit: SlopeFit | None


def summarize(records: list[RunRecord]) -> dict[str, AlgorithmSummary]:
    """Mean final-round RMSE per (algorithm, m) and the log-log slope against n."""
    final = [r for r in records if r.round == FINAL]
    out: dict[str, AlgorithmSummary] = {}
    for algorithm in sorted({r.algorithm for r in final}):
        rows = [r for r in final if r.algorithm == algorithm]
        m_values = sorted({r.m for r in rows})
        means = {m: float(np.mean([r.rmse for r in rows if r.m == m])) for m in m_values}
        ns = {m: int(np.mean([r.n for r in rows if r.m == m])) for m in m_values}
        points = [(ns[m], means[m]) for m in m_values]
        fit = fit_loglog_slope(points) if len({n for n, _ in points}) >= 2 and all(v > 0 for _, v in points) else None
        out[algorithm] = AlgorithmSummary(algorithm, means, ns, fit)
    return out


def summary_payload(summaries: dict[str, AlgorithmSummary]) -> dict:
    """JSON-ready form of :func:`summarize` output."""
    out = {}
    for name, s in summaries.items():
        out[name] = {
            "mean_rmse": {str(m): v for m, v in s.mean_rmse.items()},
            "n": {str(m): v for m, v in s.n_values.items()},
            "slope": None if s.fit is None else s.fit.slope,
            "intercept": None if s.fit is None else s.fit.intercept,
            "residual": None if s.fit is None else s.fit.residual,
        }
    return out


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _typed(key: str, raw: str, cast):
    try:
        return cast(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Bad value for {key}: {raw!r}") from e


def _bool(raw: str) -> bool:
    lowered = str(raw).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


_SWEEP_CASTS = {
    "algorithms": lambda v: tuple(_split(v)),
    "m_values": lambda v: tuple(int(x) for x in _split(v)),
    "repetitions": int,
    "seed": int,
    "test_size": int,
    "beta": float,
    "alpha_n0": float,
    "n_per_party": int,
    "local_iters": int,
    "schedule": str,
    "timing": _bool,
    "trace": _bool,
    "workers": int,
}
_PARAM_CASTS = {"c": ("C", float), "d": ("D", float), "eta": ("eta", float), "rounds": ("rounds", int)}


def sweep_config_from_sources(
    sections: dict[str, dict[str, str]] | None = None,
    overrides: dict | None = None,
    defaults: dict | None = None,
) -> SweepConfig:
    """Merge defaults < config-file sections < overrides into a SweepConfig.

    ``sections`` is the parsed INI file ([sweep] plus one section per
    algorithm). ``defaults`` and ``overrides`` hold already-typed values
    keyed like the [sweep] section; ``None`` entries are ignored.
    """
    merged: dict = {k: v for k, v in (defaults or {}).items() if v is not None}
    sections = sections or {}
    for key, raw in sections.get("sweep", {}).items():
        if key in _SWEEP_CASTS:
            merged[key] = _typed(key, raw, _SWEEP_CASTS[key])
        elif key in ("noise_sd", "eta"):
            merged[key] = _typed(key, raw, float)
        elif key == "truncation":
            merged[key] = _typed(key, raw, int)
        elif key == "task":
            merged[key] = raw.strip()
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

    task = TaskSpec(
        merged.pop("task", TaskVariant.TOY1D),
        truncation=merged.pop("truncation", DEFAULT_TRUNCATION),
        noise_sd=merged.pop("noise_sd", DEFAULT_NOISE_SD),
    )
    params: dict[str, AlgorithmParams] = {}
    eta = merged.pop("eta", None)
    if eta is not None:
        params["dcl-kr"] = AlgorithmParams(eta=eta)
        params["central-krgd"] = AlgorithmParams(eta=eta)
    for name in ALGORITHMS:
        fields = {}
        for key, raw in sections.get(name, {}).items():
            attr, cast = _PARAM_CASTS[key]
            fields[attr] = _typed(f"{name}.{key}", raw, cast)
        if fields:
            params[name] = replace(params.get(name, AlgorithmParams()), **fields)
    return SweepConfig(task=task, params=params, **merged)
