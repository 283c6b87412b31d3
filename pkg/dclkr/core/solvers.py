"""Single-machine kernel regressors: GD iterates, ridge, Nyström ridge."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import linalg

from dclkr.core.dataset import PartyDataset
from dclkr.core.errors import ConfigError
from dclkr.core.kernels import KernelSpec, RkhsFunction, as_points, gram, psd_pinv

logger = logging.getLogger(__name__)


def check_eta(kernel: KernelSpec, eta: float) -> None:
    if not 0.0 < eta < kernel.eta_bound():
        raise ConfigError(f"Learning rate must lie in (0, 1/kappa^2) = (0, {kernel.eta_bound():g}), got {eta}")


def _check_nonempty(D: PartyDataset) -> None:
    if D.n == 0:
        raise ConfigError("Dataset is empty")


def spd_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric PSD A; Cholesky first, pseudo-inverse on failure."""
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
        return linalg.cho_solve(factor, b, check_finite=False)
    except linalg.LinAlgError:
        logger.warning(f"Cholesky failed on a {A.shape[0]}x{A.shape[1]} system; using pseudo-inverse")
        return psd_pinv(A) @ b


@dataclass
class PartyGrams:
    """Kernel blocks a party reuses across rounds."""

    xx: np.ndarray
    xz: np.ndarray

    @classmethod
    def build(cls, kernel: KernelSpec, party: PartyDataset, Z) -> "PartyGrams":
        Z = as_points(Z, kernel.dim)
        return cls(xx=gram(kernel, party.X), xz=gram(kernel, party.X, Z))


def local_gd_update(
    c,
    Z,
    party: PartyDataset,
    eta: float,
    E: int,
    *,
    kernel: KernelSpec,
    grams: PartyGrams | None = None,
    kzz_c: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Run E local GD steps from f = sum_j c_j k_{z_j}.

    The local iterate is f + sum_l a_l k_{x_l}; only ``a`` moves:
    ``a <- a - (eta/n_i)(K_XZ c + K_XX a - y)``.

    Returns:
        (predictions on Z, the local coefficient vector a).
    """
    check_eta(kernel, eta)
    _check_nonempty(party)
    if E < 0:
        raise ConfigError(f"E must be nonnegative, got {E}")
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    if grams is None:
        grams = PartyGrams.build(kernel, party, Z)
    if grams.xz.shape[1] != c.shape[0]:
        raise ConfigError(f"{c.shape[0]} span coefficients but {grams.xz.shape[1]} public inputs")

    n_i = party.n
    step = eta / n_i
    base = grams.xz @ c
    a = np.zeros(n_i)
    for _ in range(E):
        a -= step * (base + grams.xx @ a - party.y)

    if kzz_c is None:
        kzz_c = gram(kernel, Z) @ c if c.shape[0] else np.zeros(0)
    preds_z = kzz_c + grams.xz.T @ a
    return preds_z, a


def iter_kernel_gd(K: np.ndarray, y: np.ndarray, eta: float, T: int) -> Iterator[np.ndarray]:
    """Yield the coefficients after each of T steps of b <- b - (eta/n)(K b - y)."""
    n = y.shape[0]
    b = np.zeros(n)
    step = eta / n
    for _ in range(T):
        b = b - step * (K @ b - y)
        yield b


def kernel_gd(kernel: KernelSpec, D: PartyDataset, eta: float, T: int) -> RkhsFunction:
    """T steps of kernel gradient descent from zero on the empirical risk of D."""
    check_eta(kernel, eta)
    _check_nonempty(D)
    if T < 0:
        raise ConfigError(f"T must be nonnegative, got {T}")
    b = np.zeros(D.n)
    for b in iter_kernel_gd(gram(kernel, D.X), D.y, eta, T):
        pass
    return RkhsFunction(kernel, D.X, b)


def kernel_gd_spectral(kernel: KernelSpec, D: PartyDataset, eta: float, T: int) -> RkhsFunction:
    """Closed form of ``kernel_gd`` through the spectral filter of K/n.

    b_T = U diag(g(w)) U^T y / n with g(w) = (1 - (1 - eta w)^T) / w, and
    g(0) = eta T.
    """
    check_eta(kernel, eta)
    _check_nonempty(D)
    n = D.n
    w, U = linalg.eigh(gram(kernel, D.X) / n)
    w = np.clip(w, 0.0, None)
    filt = np.full_like(w, eta * T)
    pos = w > 0
    filt[pos] = -np.expm1(T * np.log1p(-eta * w[pos])) / w[pos]
    b = U @ (filt * (U.T @ D.y)) / n
    return RkhsFunction(kernel, D.X, b)


def krr_closed_form(kernel: KernelSpec, D: PartyDataset, lam: float) -> RkhsFunction:
    """Kernel ridge regression: coeffs = (K + n lam I)^{-1} y."""
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    _check_nonempty(D)
    K = gram(kernel, D.X)
    K[np.diag_indices_from(K)] += D.n * lam
    return RkhsFunction(kernel, D.X, spd_solve(K, D.y))


def nystrom_krr(kernel: KernelSpec, D: PartyDataset, Z, lam: float) -> RkhsFunction:
    """Ridge regression restricted to span{k_z : z in Z}.

    Minimizes ||K_XZ c - y||^2 + n lam c^T K_ZZ c, solved as
    c = (K_ZX K_XZ + n lam K_ZZ)^+ K_ZX y.
    """
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    _check_nonempty(D)
    Z = as_points(Z, kernel.dim)
    kxz = gram(kernel, D.X, Z)
    A = kxz.T @ kxz + D.n * lam * gram(kernel, Z)
    return RkhsFunction(kernel, Z, spd_solve(A, kxz.T @ D.y))
