"""Diagnose plugin: eigendecay, effective dimension and R(eps) for a kernel sample."""
import argparse
import logging

import numpy as np
import pandas as pd

from dclkr.core.app import float_list
from dclkr.core.datagen import make_rng
from dclkr.core.diagnostics import (
    effective_dimension,
    empirical_eigvals,
    min_kernel_eigvals,
    rademacher_r,
)
from dclkr.core.errors import ConfigError
from dclkr.core.kernels import KernelSpec, KernelVariant
from dclkr.plugins import Plugin, resolve_seed, write_frame

logger = logging.getLogger(__name__)


def diagnose_frame(
    kernel: KernelSpec,
    X: np.ndarray,
    lambdas,
    epsilons,
    top: int = 10,
) -> pd.DataFrame:
    """Long-format report with columns quantity, param, value, reference."""
    n = X.shape[0]
    eig = empirical_eigvals(kernel, X)
    rows = []
    count = min(top, n)
    reference = min_kernel_eigvals(count) if kernel.variant is KernelVariant.MIN else np.full(count, np.nan)
    for i in range(count):
        rows.append(("eigenvalue", float(i + 1), float(eig[i]), float(reference[i])))
    for lam in lambdas:
        # N(lam) <= kappa^2 / lam
        rows.append(("effective_dimension", float(lam), effective_dimension(eig, lam), kernel.kappa**2 / lam))
    for eps in epsilons:
        rows.append(("rademacher_r", float(eps), rademacher_r(eig, eps, n), np.nan))
    return pd.DataFrame(rows, columns=["quantity", "param", "value", "reference"])


class DiagnosePlugin(Plugin):
    @property
    def name(self) -> str:
        return "diagnose"

    @property
    def commands(self):
        return [("diagnose", "Report eigendecay, N(lambda) and R(eps) for a kernel on a uniform sample")]

    def register(self, parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--kernel", choices=[v.value for v in KernelVariant], default="min")
        parser.add_argument("--bandwidth", type=float, default=0.2, help="Gaussian bandwidth")
        parser.add_argument("--n", type=int, default=2000, help="sample size")
        parser.add_argument("--grid", action="store_true",
                            help="use the grid i/n instead of random draws (1-D kernels only)")
        parser.add_argument("--lambdas", type=float_list, default=[0.1, 0.01])
        parser.add_argument("--epsilons", type=float_list, default=[0.01, 0.1, 1.0])
        parser.add_argument("--top", type=int, default=10, help="eigenvalues to report")

    def run(self, args: argparse.Namespace) -> None:
        if args.n < 1:
            raise ConfigError(f"--n must be positive, got {args.n}")
        kernel = KernelSpec.from_name(args.kernel, bandwidth=args.bandwidth)
        dim = kernel.dim or 1
        if args.grid:
            if dim != 1:
                raise ConfigError("--grid needs a 1-D kernel")
            X = (np.arange(1, args.n + 1, dtype=np.float64) / args.n).reshape(-1, 1)
        else:
            X = make_rng(resolve_seed(args)).random((args.n, dim))
        frame = diagnose_frame(kernel, X, args.lambdas, args.epsilons, args.top)
        logger.info(f"diagnose: {kernel.variant.value} kernel, n={args.n}, d={dim}")
        write_frame(frame, args)
