"""Oracle-check plugin: iterative DCL-KR against its dense recurrence."""
import argparse
import logging

import numpy as np
import pandas as pd

from dclkr.core.datagen import make_rng
from dclkr.core.dataset import PartyDataset
from dclkr.core.errors import AcceptanceError
from dclkr.core.kernels import KernelSpec, KernelVariant, gram
from dclkr.core.protocols import FederationConfig, dcl_kr, dcl_kr_recurrence_oracle
from dclkr.plugins import Plugin, resolve_seed, write_frame

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8


def random_instance(rng: np.random.Generator, seed: int) -> tuple[list[PartyDataset], FederationConfig]:
    """Small min-kernel federation: m in {1,2,3}, n_i <= 10, n0 <= 12, E in {1,3}, T in {1,4}."""
    kernel = KernelSpec(KernelVariant.MIN)
    m = int(rng.integers(1, 4))
    parties = []
    for _ in range(m):
        n_i = int(rng.integers(1, 11))
        X = rng.random((n_i, 1))
        parties.append(PartyDataset(X, np.sin(3.0 * X[:, 0]) + 0.1 * rng.standard_normal(n_i)))
    Z = rng.random((int(rng.integers(1, 13)), 1))
    cfg = FederationConfig.for_parties(
        parties, Z, kernel,
        E=int(rng.choice([1, 3])), T=int(rng.choice([1, 4])), eta=0.5, seed=seed,
    )
    return parties, cfg


def check_instance(parties, cfg: FederationConfig) -> float:
    """Max absolute gap on Z between the iterative protocol and the recurrence."""
    f, _ = dcl_kr(parties, cfg)
    on_z = gram(cfg.kernel, cfg.Z, f.centers) @ f.coeffs
    return float(np.max(np.abs(on_z - dcl_kr_recurrence_oracle(parties, cfg))))


def oracle_frame(instances: int, seed: int) -> pd.DataFrame:
    rows = []
    for k in range(instances):
        rng = make_rng(seed, k)
        parties, cfg = random_instance(rng, seed)
        gap = check_instance(parties, cfg)
        rows.append((k, cfg.m, sum(p.n for p in parties), cfg.Z.shape[0], cfg.E, cfg.T, gap))
    return pd.DataFrame(rows, columns=["instance", "m", "n", "n0", "E", "T", "max_abs_diff"])


class OracleCheckPlugin(Plugin):
    @property
    def name(self) -> str:
        return "oracle-check"

    @property
    def commands(self):
        return [("oracle-check", "Compare iterative DCL-KR with its closed-form recurrence")]

    def register(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--instances", type=int, default=20)
        parser.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)

    def run(self, args: argparse.Namespace) -> None:
        frame = oracle_frame(args.instances, resolve_seed(args))
        write_frame(frame, args)
        worst = float(frame["max_abs_diff"].max()) if len(frame) else 0.0
        logger.info(f"oracle-check: {len(frame)} instances, max deviation {worst:.3e}")
        if worst > args.tolerance:
            raise AcceptanceError(
                f"DCL-KR deviates from the recurrence by {worst:.3e} > {args.tolerance:g}", deviation=worst
            )
