"""Synthetic tasks, public-input samplers and the non-iid partitioner."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import product

import numpy as np

from dclkr.core.dataset import PartyDataset
from dclkr.core.errors import ConfigError, CoverageError
from dclkr.core.kernels import KernelSpec, KernelVariant, as_points

logger = logging.getLogger(__name__)

DEFAULT_TRUNCATION = 200
DEFAULT_NOISE_SD = 0.44
_CHUNK = 8192


def make_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    """Counter-based (Philox) generator for ``seed``; ``spawn_key`` selects an independent stream."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=spawn_key)))


def spawn_rngs(seed: int, count: int, *spawn_key: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed, spawn_key=spawn_key).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


class TaskVariant(str, Enum):
    TOY1D = "toy1d"
    TOY3D = "toy3d"


def target_toy1d(x, truncation: int = DEFAULT_TRUNCATION):
    """Partial sum of f0*(x) = sum_i sqrt(2)/i^3 sin((2i-1) pi x / 2).

    The dropped tail is bounded by sqrt(2) / (2 I^2).
    """
    if truncation < 1:
        raise ConfigError(f"truncation must be positive, got {truncation}")
    scalar = np.ndim(x) == 0
    xs = np.asarray(x, dtype=np.float64).reshape(-1)
    i = np.arange(1, truncation + 1, dtype=np.float64)
    amp = np.sqrt(2.0) / i**3
    freq = (2.0 * i - 1.0) * np.pi / 2.0
    out = np.empty_like(xs)
    for lo in range(0, xs.shape[0], _CHUNK):
        block = xs[lo : lo + _CHUNK]
        out[lo : lo + _CHUNK] = np.sin(np.outer(block, freq)) @ amp
    return float(out[0]) if scalar else out


def toy1d_tail_bound(truncation: int) -> float:
    return math.sqrt(2.0) / (2.0 * truncation**2)


def target_toy3d(x):
    """f0*(x) = (1 - |x|)_+^6 (35 |x|^2 + 18 |x| + 3)."""
    pts = as_points(x, 3)
    r = np.linalg.norm(pts, axis=1)
    vals = np.clip(1.0 - r, 0.0, None) ** 6 * (35.0 * r**2 + 18.0 * r + 3.0)
    return float(vals[0]) if np.ndim(x) == 1 and np.shape(x) == (3,) else vals


@dataclass(frozen=True)
class TaskSpec:
    variant: TaskVariant
    truncation: int = DEFAULT_TRUNCATION
    noise_sd: float = DEFAULT_NOISE_SD

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "variant", TaskVariant(self.variant))
        except ValueError as e:
            raise ConfigError(f"Unknown task: {self.variant!r}") from e
        if self.truncation < 1:
            raise ConfigError(f"truncation must be positive, got {self.truncation}")
        if self.noise_sd < 0:
            raise ConfigError(f"noise_sd must be nonnegative, got {self.noise_sd}")

    @property
    def r(self) -> float:
        return 1.0

    @property
    def s(self) -> float:
        return 0.5 if self.variant is TaskVariant.TOY1D else 0.75

    @property
    def dim(self) -> int:
        return 1 if self.variant is TaskVariant.TOY1D else 3

    @property
    def rate_exponent(self) -> float:
        """1 / (2r + s), the exponent in the lambda and T schedules."""
        return 1.0 / (2.0 * self.r + self.s)

    def kernel(self) -> KernelSpec:
        if self.variant is TaskVariant.TOY1D:
            return KernelSpec(KernelVariant.MIN)
        return KernelSpec(KernelVariant.WENDLAND0, dim=3)

    def target(self, X) -> np.ndarray:
        X = as_points(X, self.dim)
        if self.variant is TaskVariant.TOY1D:
            return target_toy1d(X[:, 0], self.truncation)
        return target_toy3d(X)


def sample_task(task: TaskSpec, n: int, rng: np.random.Generator) -> PartyDataset:
    """n i.i.d. draws: x uniform on [0, 1]^d, y = f0*(x) + N(0, noise_sd^2)."""
    if n < 1:
        raise ConfigError(f"n must be at least 1, got {n}")
    X = rng.random((n, task.dim))
    y = task.target(X)
    if task.noise_sd > 0:
        y = y + task.noise_sd * rng.standard_normal(n)
    return PartyDataset(X, y)


def tilted_inverse_cdf(u, beta: float) -> np.ndarray:
    """Inverse of F(x) = (1 - beta) x^2 + beta x on [0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    if beta == 1.0:
        return u.copy()
    a = 1.0 - beta
    return (-beta + np.sqrt(beta**2 + 4.0 * a * u)) / (2.0 * a)


def sample_public(n0: int, beta: float, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Public inputs with density prod_i ((2 - 2 beta) x_i + beta) on [0, 1]^dim."""
    if not 0.0 < beta <= 1.0:
        raise ConfigError(f"beta must lie in (0, 1], got {beta}")
    if n0 < 1:
        raise ConfigError(f"n0 must be at least 1, got {n0}")
    return tilted_inverse_cdf(rng.random((n0, dim)), beta)


def public_count_rule(n: int, r: float, s: float, alpha: float = 1.0) -> int:
    """n0 = round(alpha * n^(1/(2r+s)) * (log10 n)^3), at least 1."""
    if n < 10:
        raise ConfigError(f"public_count_rule needs n >= 10, got {n}")
    if not alpha > 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    value = alpha * n ** (1.0 / (2.0 * r + s)) * math.log10(n) ** 3
    return max(1, int(round(value)))


@dataclass
class PartitionSpec:
    """Axis-aligned boxes partitioning the input domain.

    ``lows`` and ``highs`` have shape (cells, d). Points are assigned to the
    box with lo <= x < hi, closed on the domain's upper faces.
    """

    lows: np.ndarray
    highs: np.ndarray
    dirichlet_alpha: float = 10.0
    max_retries: int = 10_000
    domain_low: np.ndarray = field(init=False, repr=False)
    domain_high: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.lows = np.atleast_2d(np.asarray(self.lows, dtype=np.float64))
        self.highs = np.atleast_2d(np.asarray(self.highs, dtype=np.float64))
        if self.lows.shape != self.highs.shape or self.lows.shape[0] < 1:
            raise ConfigError("Partition needs matching, nonempty lows/highs")
        if np.any(self.highs <= self.lows):
            raise ConfigError("Every cell must have positive extent")
        if not self.dirichlet_alpha > 0:
            raise ConfigError(f"dirichlet_alpha must be positive, got {self.dirichlet_alpha}")
        if self.max_retries < 1:
            raise ConfigError(f"max_retries must be positive, got {self.max_retries}")
        self.domain_low = self.lows.min(axis=0)
        self.domain_high = self.highs.max(axis=0)
        self._validate_partition()

    def _validate_partition(self) -> None:
        c = self.n_cells
        for a in range(c):
            for b in range(a + 1, c):
                overlap = np.minimum(self.highs[a], self.highs[b]) - np.maximum(self.lows[a], self.lows[b])
                if np.all(overlap > 1e-12):
                    raise ConfigError(f"Cells {a} and {b} overlap")
        volume = np.prod(self.highs - self.lows, axis=1).sum()
        domain = np.prod(self.domain_high - self.domain_low)
        if abs(volume - domain) > 1e-9 * domain:
            raise ConfigError("Cells do not cover the domain")

    @property
    def n_cells(self) -> int:
        return self.lows.shape[0]

    @property
    def dim(self) -> int:
        return self.lows.shape[1]

    @classmethod
    def grid(cls, dim: int, splits: int, **kwargs) -> "PartitionSpec":
        """Uniform grid of splits^dim boxes on [0, 1]^dim."""
        edges = np.linspace(0.0, 1.0, splits + 1)
        lows, highs = [], []
        for cell in product(range(splits), repeat=dim):
            lows.append([edges[k] for k in cell])
            highs.append([edges[k + 1] for k in cell])
        return cls(np.array(lows), np.array(highs), **kwargs)

    @classmethod
    def for_task(cls, task: TaskSpec, **kwargs) -> "PartitionSpec":
        """Eight intervals of width 1/8 for Toy-1D; the eight octants of [0, 1]^3 for Toy-3D."""
        if task.variant is TaskVariant.TOY1D:
            return cls.grid(1, 8, **kwargs)
        return cls.grid(3, 2, **kwargs)

    def cell_index(self, X) -> np.ndarray:
        X = as_points(X, self.dim)
        upper_face = self.highs >= self.domain_high
        index = np.full(X.shape[0], -1, dtype=np.int64)
        for k in range(self.n_cells):
            below = (X < self.highs[k]) | (upper_face[k] & (X <= self.highs[k]))
            inside = np.all((X >= self.lows[k]) & below, axis=1) & (index < 0)
            index[inside] = k
        if np.any(index < 0):
            raise ConfigError(f"{int((index < 0).sum())} points lie outside the partition domain")
        return index


@dataclass
class AllocationPlan:
    """Dirichlet base ratios and the cell-coverage indicator C (cells x parties)."""

    ratios: np.ndarray
    coverage: np.ndarray
    attempts: int

    def cell_ratios(self, cell: int) -> np.ndarray:
        weights = self.ratios * self.coverage[cell]
        return weights / weights.sum()


def draw_allocation_plan(m: int, spec: PartitionSpec, rng: np.random.Generator) -> AllocationPlan:
    """Draw party ratios, then redraw two cells per party until every cell is covered."""
    if m < 1:
        raise ConfigError(f"m must be at least 1, got {m}")
    c = spec.n_cells
    ratios = rng.dirichlet(np.full(m, spec.dirichlet_alpha))
    for attempt in range(1, spec.max_retries + 1):
        picks = rng.integers(0, c, size=(m, 2))
        coverage = np.zeros((c, m), dtype=np.int8)
        coverage[picks[:, 0], np.arange(m)] = 1
        coverage[picks[:, 1], np.arange(m)] = 1
        if np.all(coverage.sum(axis=1) > 0):
            if attempt > 1000:
                logger.warning(f"Cell coverage needed {attempt} draws (m={m}, cells={c})")
            return AllocationPlan(ratios=ratios, coverage=coverage, attempts=attempt)
    raise CoverageError(
        f"Could not cover {c} cells with {m} parties in {spec.max_retries} draws",
        m=m, attempts=spec.max_retries,
    )


def partition_noniid(
    pool: PartyDataset, m: int, spec: PartitionSpec, rng: np.random.Generator
) -> list[PartyDataset]:
    """Split a pooled sample across m parties with cell-dependent ratios.

    Each point of cell i goes to party k with probability
    alpha_k C_ik / sum_j alpha_j C_ij. Parties keep pool order. A party may
    come out empty when its cells are sparsely populated.
    """
    plan = draw_allocation_plan(m, spec, rng)
    cells = spec.cell_index(pool.X)
    owner = np.empty(pool.n, dtype=np.int64)
    for cell in range(spec.n_cells):
        members = np.flatnonzero(cells == cell)
        if members.size:
            owner[members] = rng.choice(m, size=members.size, p=plan.cell_ratios(cell))
    return [pool.subset(np.flatnonzero(owner == k)) for k in range(m)]
