"""Spectral diagnostics and rate fitting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from dclkr.core.errors import ConfigError
from dclkr.core.kernels import KernelSpec, gram


def empirical_eigvals(kernel: KernelSpec, X) -> np.ndarray:
    """Eigenvalues of (1/n) K_XX in decreasing order, tiny negatives clipped to 0."""
    K = gram(kernel, X)
    w = linalg.eigvalsh(K / K.shape[0])
    return np.clip(w[::-1], 0.0, None)


def min_kernel_eigvals(count: int) -> np.ndarray:
    """((2i - 1) pi / 2)^-2 for i = 1..count: the spectrum of min(x, y) under U[0, 1]."""
    i = np.arange(1, count + 1, dtype=np.float64)
    return ((2.0 * i - 1.0) * np.pi / 2.0) ** -2


def effective_dimension(eigvals, lam: float) -> float:
    """N(lam) = sum_i w_i / (w_i + lam)."""
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    w = np.clip(np.asarray(eigvals, dtype=np.float64), 0.0, None)
    return float(np.sum(w / (w + lam)))


def rademacher_r(eigvals, epsilon: float, n: int) -> float:
    """R(eps) = sqrt((1/n) sum_i min(w_i, eps^2))."""
    if epsilon < 0:
        raise ConfigError(f"epsilon must be nonnegative, got {epsilon}")
    if n < 1:
        raise ConfigError(f"n must be positive, got {n}")
    w = np.clip(np.asarray(eigvals, dtype=np.float64), 0.0, None)
    return float(np.sqrt(np.sum(np.minimum(w, epsilon**2)) / n))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float


def fit_loglog_slope(points) -> SlopeFit:
    """Least squares of log10(rmse) on log10(n).

    ``residual`` is the root mean square of the fit residuals.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ConfigError("Expected a list of (n, rmse) pairs")
    if np.any(pts <= 0):
        raise ConfigError("n and rmse must all be positive for a log-log fit")
    if np.unique(pts[:, 0]).size < 2:
        raise ConfigError("Need at least two distinct n values")
    x = np.log10(pts[:, 0])
    y = np.log10(pts[:, 1])
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    return SlopeFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))))
