"""Kernels, Gram matrices and RKHS function expansions.

Scaling convention
------------------
Functions are finite expansions ``f = sum_l coeffs[l] * k(., centers[l])``.
The empirical risk uses the scaled norm ``||v||^2 = (1/n) sum v_i^2``, so the
adjoint of the sampling operator is ``S^T v = (1/n) sum_i v_i k(., x_i)``. All
``1/n`` factors are absorbed into the coefficients: the minimum-norm
interpolant of values ``y`` on ``Z`` is ``S_Z^T (S_Z S_Z^T)^{-1} y``, and since
``S_Z S_Z^T = K_ZZ / n0`` its coefficient vector is simply ``K_ZZ^+ y``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from dclkr.core.errors import ConfigError

logger = logging.getLogger(__name__)

# Eigenvalues below this fraction of the largest one are treated as zero.
PINV_RTOL = 1e-12


class KernelVariant(str, Enum):
    MIN = "min"
    WENDLAND0 = "wendland0"
    WENDLAND2 = "wendland2"
    GAUSSIAN = "gaussian"


_DEFAULT_DIMS = {
    KernelVariant.MIN: 1,
    KernelVariant.WENDLAND0: 3,
    KernelVariant.WENDLAND2: 3,
    KernelVariant.GAUSSIAN: None,
}


@dataclass(frozen=True)
class KernelSpec:
    """A named positive-definite kernel.

    ``dim`` is the input dimension the kernel is documented on; ``None``
    accepts any dimension.
    """

    variant: KernelVariant
    bandwidth: float = 0.2
    dim: int | None = None

    def __post_init__(self) -> None:
        try:
            variant = KernelVariant(self.variant)
        except ValueError as e:
            raise ConfigError(f"Unknown kernel variant: {self.variant!r}") from e
        object.__setattr__(self, "variant", variant)
        if variant is KernelVariant.MIN and self.dim not in (None, 1):
            raise ConfigError("The min kernel is defined on [0, 1] only")
        if self.dim is None:
            object.__setattr__(self, "dim", _DEFAULT_DIMS[variant])
        if variant is KernelVariant.GAUSSIAN and not self.bandwidth > 0:
            raise ConfigError(f"Gaussian bandwidth must be positive, got {self.bandwidth}")

    @classmethod
    def from_name(cls, name: str, bandwidth: float = 0.2, dim: int | None = None) -> "KernelSpec":
        return cls(name.lower(), bandwidth=bandwidth, dim=dim)

    @property
    def kappa(self) -> float:
        """sup_x sqrt(k(x, x))."""
        if self.variant is KernelVariant.WENDLAND2:
            return float(np.sqrt(3.0))
        return 1.0

    def eta_bound(self) -> float:
        return 1.0 / self.kappa**2


def as_points(A, dim: int | None = None) -> np.ndarray:
    """Coerce a point set to a float64 array of shape (p, d)."""
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(-1, dim)
    if arr.ndim != 2:
        raise ConfigError(f"Point sets must be 2-D, got shape {arr.shape}")
    return arr


def _check_dim(kernel: KernelSpec, *point_sets: np.ndarray) -> None:
    dims = {P.shape[1] for P in point_sets if P.shape[0] > 0}
    if len(dims) > 1:
        raise ConfigError(f"Point sets have mismatched dimensions: {sorted(dims)}")
    if kernel.dim is not None and dims and dims != {kernel.dim}:
        raise ConfigError(
            f"Kernel {kernel.variant.value} expects {kernel.dim}-dimensional inputs, got {dims.pop()}"
        )


def gram(kernel: KernelSpec, A, B=None) -> np.ndarray:
    """Pairwise kernel matrix with entry (i, j) = k(A_i, B_j)."""
    A = as_points(A, kernel.dim)
    B = A if B is None else as_points(B, kernel.dim)
    _check_dim(kernel, A, B)
    if A.shape[0] == 0 or B.shape[0] == 0:
        return np.zeros((A.shape[0], B.shape[0]))

    variant = kernel.variant
    if variant is KernelVariant.MIN:
        return np.minimum(A[:, 0][:, None], B[:, 0][None, :])
    if variant is KernelVariant.GAUSSIAN:
        sq = cdist(A, B, "sqeuclidean")
        return np.exp(-sq / (2.0 * kernel.bandwidth**2))

    r = cdist(A, B, "euclidean")
    base = np.clip(1.0 - r, 0.0, None)
    if variant is KernelVariant.WENDLAND0:
        return base**2
    return base**6 * (35.0 * r**2 + 18.0 * r + 3.0)


@dataclass
class RkhsFunction:
    """f = sum_l coeffs[l] k(., centers[l])."""

    kernel: KernelSpec
    centers: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        self.centers = as_points(self.centers, self.kernel.dim)
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64).reshape(-1)
        if self.centers.shape[0] != self.coeffs.shape[0]:
            raise ConfigError(
                f"{self.centers.shape[0]} centers but {self.coeffs.shape[0]} coefficients"
            )

    @classmethod
    def zero(cls, kernel: KernelSpec, centers) -> "RkhsFunction":
        centers = as_points(centers, kernel.dim)
        return cls(kernel, centers, np.zeros(centers.shape[0]))

    def __call__(self, X) -> np.ndarray:
        return evaluate(self, X)

    def rkhs_norm(self) -> float:
        K = gram(self.kernel, self.centers)
        return float(np.sqrt(max(self.coeffs @ K @ self.coeffs, 0.0)))


def evaluate(f: RkhsFunction, X) -> np.ndarray:
    """Values f(X_j) = sum_l coeffs_l k(X_j, centers_l)."""
    X = as_points(X, f.kernel.dim)
    if f.centers.shape[0] == 0:
        return np.zeros(X.shape[0])
    return gram(f.kernel, X, f.centers) @ f.coeffs


def psd_pinv(K: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Pseudo-inverse of a symmetric PSD matrix via eigendecomposition."""
    if K.size == 0:
        return np.zeros_like(K)
    w, U = linalg.eigh(K)
    cutoff = rtol * max(w[-1], 0.0)
    keep = w > cutoff
    dropped = int((~keep).sum())
    if dropped:
        logger.debug(f"psd_pinv: zeroed {dropped} of {w.size} eigenvalues")
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    return (U * inv) @ U.T


@dataclass
class NystromBasis:
    """Cached Gram matrix and pseudo-inverse for span{k_z : z in Z}.

    Repeated projections onto the same public inputs reuse one
    eigendecomposition.
    """

    kernel: KernelSpec
    Z: np.ndarray
    K: np.ndarray = field(init=False, repr=False)
    K_pinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.Z = as_points(self.Z, self.kernel.dim)
        self.K = gram(self.kernel, self.Z)
        self.K_pinv = psd_pinv(self.K)

    @property
    def size(self) -> int:
        return self.Z.shape[0]

    def interpolate(self, targets) -> np.ndarray:
        """Coefficients K_ZZ^+ targets, with one step of iterative refinement.

        ``targets`` is a vector over Z or a matrix whose columns are.
        """
        y = np.asarray(targets, dtype=np.float64)
        if y.ndim != 2:
            y = y.reshape(-1)
        if y.shape[0] != self.size:
            raise ConfigError(f"Expected {self.size} targets, got {y.shape[0]}")
        c = self.K_pinv @ y
        c += self.K_pinv @ (y - self.K @ c)
        return c

    def function(self, coeffs) -> RkhsFunction:
        return RkhsFunction(self.kernel, self.Z, coeffs)


def min_norm_interpolant(kernel: KernelSpec, Z, targets) -> RkhsFunction:
    """Smallest-norm function in span{k_z} matching ``targets`` on ``Z``.

    This is the limit of infinitely many GD steps on the public-input risk
    from any start inside span{k_z}.
    """
    Z = as_points(Z, kernel.dim)
    if Z.shape[0] < 1:
        raise ConfigError("min_norm_interpolant needs at least one point")
    basis = NystromBasis(kernel, Z)
    return basis.function(basis.interpolate(targets))


def nystrom_project(f: RkhsFunction, Z, kernel: KernelSpec | None = None) -> RkhsFunction:
    """Orthogonal projection P_Z f onto span{k_z : z in Z}."""
    if kernel is not None and kernel != f.kernel:
        raise ConfigError(
            f"Cannot project a {f.kernel.variant.value} function with a {kernel.variant.value} kernel"
        )
    return min_norm_interpolant(f.kernel, Z, evaluate(f, Z))
