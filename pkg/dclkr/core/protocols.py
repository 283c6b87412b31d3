"""Multi-party orchestration: DCL-KR, its dense recurrence oracle, DC-NY and DKRR-NY-CM."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from dclkr.core.dataset import PartyDataset
from dclkr.core.errors import ConfigError
from dclkr.core.kernels import KernelSpec, NystromBasis, RkhsFunction, as_points, evaluate, gram
from dclkr.core.solvers import PartyGrams, check_eta, local_gd_update, nystrom_krr

logger = logging.getLogger(__name__)

ORACLE_MAX_POINTS = 2000
WEIGHT_TOL = 1e-12


def data_weights(parties: list[PartyDataset]) -> np.ndarray:
    """n_i / n for each party, in party order."""
    sizes = np.array([p.n for p in parties], dtype=np.float64)
    if sizes.size == 0 or np.any(sizes <= 0):
        raise ConfigError("All parties must hold at least one data point")
    return sizes / sizes.sum()


@dataclass
class FederationConfig:
    m: int
    E: int
    T: int
    eta: float
    weights: np.ndarray
    Z: np.ndarray
    kernel: KernelSpec
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        self.Z = as_points(self.Z, self.kernel.dim)
        if self.m < 1 or self.weights.shape[0] != self.m:
            raise ConfigError(f"Expected {self.m} weights, got {self.weights.shape[0]}")
        if np.any(self.weights <= 0):
            raise ConfigError("All party weights must be positive")
        if abs(self.weights.sum() - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"Party weights must sum to 1, got {self.weights.sum():.15g}")
        if self.E < 1:
            raise ConfigError(f"E must be at least 1, got {self.E}")
        if self.T < 1:
            raise ConfigError(f"T must be at least 1, got {self.T}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        check_eta(self.kernel, self.eta)

    @classmethod
    def for_parties(
        cls,
        parties: list[PartyDataset],
        Z,
        kernel: KernelSpec,
        *,
        E: int,
        T: int,
        eta: float,
        seed: int = 0,
        workers: int = 1,
    ) -> "FederationConfig":
        return cls(
            m=len(parties), E=E, T=T, eta=eta, weights=data_weights(parties),
            Z=Z, kernel=kernel, seed=seed, workers=workers,
        )


@dataclass
class RoundTrace:
    """Per-round consensus vectors (T x n0) and held-out RMSE (NaN without a held-out set)."""

    consensus: np.ndarray
    rmse: np.ndarray

    def __len__(self) -> int:
        return self.consensus.shape[0]


@dataclass
class DclKrProtocol:
    """Round state for DCL-KR.

    The server keeps one span-Z coefficient vector; every party starts each
    round from it, so all parties hold the same model between rounds.
    """

    parties: list[PartyDataset]
    cfg: FederationConfig
    test: PartyDataset | None = None
    basis: NystromBasis = field(init=False, repr=False)
    coeffs: np.ndarray = field(init=False)
    round: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        if len(self.parties) != self.cfg.m:
            raise ConfigError(f"Config is for {self.cfg.m} parties, got {len(self.parties)}")
        for i, party in enumerate(self.parties):
            if party.n == 0:
                raise ConfigError(f"Party {i} is empty")
        self.basis = NystromBasis(self.cfg.kernel, self.cfg.Z)
        self._grams = [PartyGrams.build(self.cfg.kernel, p, self.cfg.Z) for p in self.parties]
        self._k_test = (
            gram(self.cfg.kernel, self.test.X, self.cfg.Z) if self.test is not None else None
        )
        self.coeffs = np.zeros(self.basis.size)

    @property
    def model(self) -> RkhsFunction:
        return self.basis.function(self.coeffs.copy())

    def _local_update(self, i: int) -> np.ndarray:
        preds_z, _ = local_gd_update(
            self.coeffs, self.cfg.Z, self.parties[i], self.cfg.eta, self.cfg.E,
            kernel=self.cfg.kernel, grams=self._grams[i], kzz_c=self._kzz_c,
        )
        return preds_z

    def step(self, executor: ThreadPoolExecutor | None = None) -> np.ndarray:
        """One communication round; returns the consensus prediction on Z."""
        self._kzz_c = self.basis.K @ self.coeffs
        indices = range(self.cfg.m)
        if executor is None:
            uploads = [self._local_update(i) for i in indices]
        else:
            uploads = list(executor.map(self._local_update, indices))

        consensus = np.zeros(self.basis.size)
        for weight, preds_z in zip(self.cfg.weights, uploads):
            consensus += weight * preds_z

        self.coeffs = self.basis.interpolate(consensus)
        self.round += 1
        return consensus

    def test_rmse(self) -> float:
        if self._k_test is None:
            return float("nan")
        resid = self._k_test @ self.coeffs - self.test.y
        return float(np.sqrt(np.mean(resid**2)))

    def run(self) -> tuple[RkhsFunction, RoundTrace]:
        T = self.cfg.T
        consensus = np.zeros((T, self.basis.size))
        rmse = np.full(T, np.nan)
        executor = ThreadPoolExecutor(max_workers=self.cfg.workers) if self.cfg.workers > 1 else None
        try:
            for t in range(T):
                consensus[t] = self.step(executor)
                rmse[t] = self.test_rmse()
                logger.debug(f"dcl-kr round {t + 1}/{T} rmse={rmse[t]:.6g}")
        finally:
            if executor is not None:
                executor.shutdown()
        return self.model, RoundTrace(consensus=consensus, rmse=rmse)


def dcl_kr(
    parties: list[PartyDataset], cfg: FederationConfig, test: PartyDataset | None = None
) -> tuple[RkhsFunction, RoundTrace]:
    """Distillation-based collaborative kernel regression.

    Each round every party runs E local GD steps from the shared model,
    uploads its predictions on Z, and the server projects the weighted
    consensus back onto span{k_z}.
    """
    return DclKrProtocol(parties, cfg, test).run()


def dcl_kr_recurrence_oracle(
    parties: list[PartyDataset], cfg: FederationConfig, rounds: int | None = None
) -> np.ndarray:
    """Dense-operator evaluation of the DCL-KR recurrence, returning f_T on Z.

    Functions live in span{k_p : p in X_1 u ... u X_m u Z} as coefficient
    vectors; each operator of the recurrence

        f_t = P_Z sum_i w_i (Tbar_i^E f_{t-1} + eta sum_{s<E} Tbar_i^s S_i^T y_i),
        Tbar_i = I - eta S_i^T S_i,

    is materialized as an N x N matrix. Only for small instances. ``rounds``
    overrides cfg.T; zero rounds gives the zero function. It agrees with
    ``dcl_kr`` up to rounding, which an ill-conditioned K_ZZ amplifies.
    """
    if len(parties) != cfg.m:
        raise ConfigError(f"Config is for {cfg.m} parties, got {len(parties)}")
    kernel = cfg.kernel
    Z = cfg.Z
    sizes = [p.n for p in parties]
    n0 = Z.shape[0]
    N = sum(sizes) + n0
    if N > ORACLE_MAX_POINTS:
        raise ConfigError(f"Oracle instance too large: n + n0 = {N} > {ORACLE_MAX_POINTS}")

    P = np.vstack([p.X for p in parties] + [Z])
    G = gram(kernel, P)
    offsets = np.cumsum([0] + sizes)
    z_idx = np.arange(offsets[-1], N)
    eye = np.eye(N)

    # P_Z: nu -> coefficients K_ZZ^+ (values on Z), placed at the Z slots. Same
    # pseudo-inverse and refinement step as the iterative protocol.
    proj = np.zeros((N, N))
    proj[z_idx, :] = NystromBasis(kernel, Z).interpolate(G[z_idx, :])

    contraction = np.zeros((N, N))
    drift = np.zeros(N)
    for w, party, lo, hi in zip(cfg.weights, parties, offsets[:-1], offsets[1:]):
        idx = np.arange(lo, hi)
        # T_i = S_i^T S_i: nu -> (1/n_i) sum_l nu(x_l) k_{x_l}
        T_i = np.zeros((N, N))
        T_i[idx, :] = G[idx, :] / party.n
        Tbar = eye - cfg.eta * T_i
        s_adj_y = np.zeros(N)
        s_adj_y[idx] = party.y / party.n

        power = eye.copy()
        acc = np.zeros(N)
        for _ in range(cfg.E):
            acc += power @ s_adj_y
            power = Tbar @ power
        contraction += w * power
        drift += w * cfg.eta * acc

    f = np.zeros(N)
    for _ in range(cfg.T if rounds is None else rounds):
        f = proj @ (contraction @ f + drift)
    return G[z_idx, :] @ f


def dc_ny(parties: list[PartyDataset], Z, kernel: KernelSpec, lam: float) -> RkhsFunction:
    """Divide-and-conquer Nyström ridge: weighted average of local span-Z solutions."""
    weights = data_weights(parties)
    Z = as_points(Z, kernel.dim)
    coeffs = np.zeros(Z.shape[0])
    for w, party in zip(weights, parties):
        coeffs += w * nystrom_krr(kernel, party, Z, lam).coeffs
    return RkhsFunction(kernel, Z, coeffs)


def dkrr_ny_cm(
    parties: list[PartyDataset],
    Z,
    kernel: KernelSpec,
    lam: float,
    eta: float = 0.01,
    T: int = 10,
) -> RkhsFunction:
    """Communicate-and-average Nyström KRR with damped Newton steps.

    In span-Z coordinates, with M_j = (1/n_j) K_ZZ^+ K_ZXj K_XjZ,
    M = sum_j w_j M_j and b = (1/n) K_ZZ^+ K_ZX y:

        u <- u - eta sum_j w_j (M_j + lam I)^{-1} ((M + lam I) u - b)
    """
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    if T < 0:
        raise ConfigError(f"T must be nonnegative, got {T}")
    weights = data_weights(parties)
    Z = as_points(Z, kernel.dim)
    basis = NystromBasis(kernel, Z)
    n0 = basis.size
    n = sum(p.n for p in parties)
    shift = lam * np.eye(n0)

    local_factors = []
    M = np.zeros((n0, n0))
    rhs = np.zeros(n0)
    for w, party in zip(weights, parties):
        kzx = gram(kernel, Z, party.X)
        M_j = basis.K_pinv @ (kzx @ kzx.T) / party.n
        M += w * M_j
        rhs += kzx @ party.y
        try:
            local_factors.append(linalg.lu_factor(M_j + shift, check_finite=False))
        except (linalg.LinAlgError, ValueError) as e:
            raise ConfigError(f"Local Newton system is singular: {e}") from e
    b = basis.K_pinv @ rhs / n
    global_op = M + shift

    u = np.zeros(n0)
    for _ in range(T):
        residual = global_op @ u - b
        direction = np.zeros(n0)
        for w, factor in zip(weights, local_factors):
            direction += w * linalg.lu_solve(factor, residual, check_finite=False)
        u = u - eta * direction
    if not np.all(np.isfinite(u)):
        raise ConfigError("DKRR-NY-CM diverged: non-finite coefficients")
    return basis.function(u)


def evaluate_rmse(f: RkhsFunction, test: PartyDataset) -> float:
    """Root mean squared error of f on a labelled set."""
    if test.n == 0:
        raise ConfigError("Test set is empty")
    resid = evaluate(f, test.X) - test.y
    return float(np.sqrt(np.mean(resid**2)))
