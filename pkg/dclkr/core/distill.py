"""Kernel-distillation mathematics on explicit feature matrices.

Feature kernels k_f(z1, z2) = g(z1)^T g(z2) are represented by their Gram
matrices on the public inputs. Similarity between kernels is the empirical
CKA built on the biased HSIC estimator

    HSIC(K1, K2) = tr(K1 H K2 H) / (p - 1)^2,   H = I - 11^T / p.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from dclkr.core.errors import ConfigError, DegenerateInputError

logger = logging.getLogger(__name__)

HSIC_SUBSAMPLE = 512
WEIGHT_TOL = 1e-12
# Self-HSIC below this fraction of the uncentered energy counts as zero.
_DEGENERATE_RTOL = 1e-20


def _features(F) -> np.ndarray:
    F = np.asarray(F, dtype=np.float64)
    if F.ndim == 1:
        F = F.reshape(-1, 1)
    if F.ndim != 2 or F.shape[0] < 2:
        raise ConfigError(f"Feature matrices need at least 2 rows, got shape {F.shape}")
    return F


def _square(K) -> np.ndarray:
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ConfigError(f"Gram matrices must be square, got shape {K.shape}")
    if K.shape[0] < 2:
        raise ConfigError("HSIC needs at least 2 samples")
    return K


def center(K: np.ndarray) -> np.ndarray:
    """H K H."""
    return K - K.mean(axis=0, keepdims=True) - K.mean(axis=1, keepdims=True) + K.mean()


def feature_gram(F) -> np.ndarray:
    F = _features(F)
    return F @ F.T


def ensemble_gram(grams, weights) -> np.ndarray:
    """sum_i w_i K_i; equals feature_gram of the column-concatenated sqrt(w_i) F_i."""
    grams = [np.asarray(K, dtype=np.float64) for K in grams]
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if not grams or len(grams) != weights.shape[0]:
        raise ConfigError(f"{len(grams)} Gram matrices but {weights.shape[0]} weights")
    shape = grams[0].shape
    if any(K.shape != shape for K in grams):
        raise ConfigError(f"Gram shapes differ: {sorted({K.shape for K in grams})}")
    if abs(weights.sum() - 1.0) > WEIGHT_TOL:
        raise ConfigError(f"Weights must sum to 1, got {weights.sum():.15g}")
    out = np.zeros(shape)
    for w, K in zip(weights, grams):
        out += w * K
    return out


def hsic(K1, K2) -> float:
    K1, K2 = _square(K1), _square(K2)
    if K1.shape != K2.shape:
        raise ConfigError(f"Gram shapes differ: {K1.shape} vs {K2.shape}")
    p = K1.shape[0]
    return float(np.sum(center(K1) * center(K2).T) / (p - 1) ** 2)


def _self_hsic(K: np.ndarray) -> float:
    value = hsic(K, K)
    p = K.shape[0]
    energy = float(np.sum(K * K)) / (p - 1) ** 2
    if value <= _DEGENERATE_RTOL * energy or value <= 0.0:
        raise DegenerateInputError("Self-HSIC is zero: the kernel is constant on these inputs")
    return value


def cka(K1, K2) -> float:
    """HSIC(K1, K2) / sqrt(HSIC(K1, K1) HSIC(K2, K2))."""
    K1, K2 = _square(K1), _square(K2)
    return hsic(K1, K2) / np.sqrt(_self_hsic(K1) * _self_hsic(K2))


def cka_grad(F, K_target) -> np.ndarray:
    """Gradient of cka(F F^T, K_target) with respect to F.

    With a = HSIC(K, Kt), b = HSIC(K, K), c = HSIC(Kt, Kt) and s = (p-1)^2,
    dcka/dK = (H Kt H / sqrt(bc) - a H K H / (b sqrt(bc))) / s, and since
    K = F F^T is symmetric, dcka/dF = 2 (dcka/dK) F.
    """
    F = _features(F)
    Kt = _square(K_target)
    if Kt.shape[0] != F.shape[0]:
        raise ConfigError(f"Target Gram is {Kt.shape[0]}x{Kt.shape[0]} but F has {F.shape[0]} rows")
    K = F @ F.T
    p = K.shape[0]
    scale = (p - 1) ** 2
    b = _self_hsic(K)
    c = _self_hsic(Kt)
    a = hsic(K, Kt)
    root = np.sqrt(b * c)
    dK = (center(Kt) / root - (a / (b * root)) * center(K)) / scale
    return 2.0 * dK @ F


def match_features(
    F, K_target, lr: float = 0.1, steps: int = 100
) -> tuple[np.ndarray, list[float]]:
    """Gradient ascent on cka(F F^T, K_target); returns the final F and the CKA history."""
    F = _features(F).copy()
    history = [cka(feature_gram(F), K_target)]
    for _ in range(steps):
        F += lr * cka_grad(F, K_target)
        history.append(cka(feature_gram(F), K_target))
    logger.debug(f"match_features: cka {history[0]:.6f} -> {history[-1]:.6f} over {steps} steps")
    return F, history


def lr_scale(self_hsics, eta0: float) -> np.ndarray:
    """Per-party rates eta0 * sqrt(max_j alpha_j) / sqrt(alpha_i)."""
    alphas = np.asarray(self_hsics, dtype=np.float64).reshape(-1)
    if alphas.size == 0:
        raise ConfigError("lr_scale needs at least one party")
    if np.any(~(alphas > 0)):
        raise DegenerateInputError("Every self-HSIC must be positive")
    if not eta0 > 0:
        raise ConfigError(f"eta0 must be positive, got {eta0}")
    roots = np.sqrt(alphas)
    return eta0 * (roots.max() / roots)


def subsample_rows(p: int, max_rows: int = HSIC_SUBSAMPLE, seed: int = 0) -> np.ndarray:
    """Sorted row indices of a seeded subsample of size min(p, max_rows)."""
    if p <= max_rows:
        return np.arange(p)
    rng = np.random.Generator(np.random.Philox(seed))
    return np.sort(rng.choice(p, size=max_rows, replace=False))


def party_self_hsics(features, max_rows: int = HSIC_SUBSAMPLE, seed: int = 0) -> np.ndarray:
    """HSIC(K_i, K_i) for each party's features on a shared public-input subsample."""
    features = [_features(F) for F in features]
    rows = {F.shape[0] for F in features}
    if len(rows) != 1:
        raise ConfigError(f"Feature matrices cover different public sets: {sorted(rows)}")
    idx = subsample_rows(rows.pop(), max_rows, seed)
    return np.array([hsic(feature_gram(F[idx]), feature_gram(F[idx])) for F in features])


def load_features(path: str | Path) -> np.ndarray:
    """Feature matrix from CSV with a header row of feature indices."""
    frame = pd.read_csv(path, float_precision="round_trip")
    return _features(frame.to_numpy(dtype=np.float64))


def save_features(F, path: str | Path) -> None:
    F = _features(F)
    pd.DataFrame(F, columns=[str(j) for j in range(F.shape[1])]).to_csv(
        path, index=False, lineterminator="\n"
    )
