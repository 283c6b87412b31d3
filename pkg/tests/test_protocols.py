import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.special import zeta

from dclkr.core.datagen import TaskSpec, make_rng, sample_task
from dclkr.core.dataset import PartyDataset
from dclkr.core.errors import ConfigError
from dclkr.core.kernels import RkhsFunction, evaluate, gram
from dclkr.core.protocols import (
    ORACLE_MAX_POINTS,
    DclKrProtocol,
    FederationConfig,
    data_weights,
    dc_ny,
    dcl_kr,
    dcl_kr_recurrence_oracle,
    dkrr_ny_cm,
    evaluate_rmse,
)
from dclkr.core.solvers import kernel_gd, nystrom_krr
from dclkr.plugins.oracle_check import check_instance, random_instance


def _fed(parties, Z, kernel, **kw):
    params = dict(E=3, T=4, eta=0.5)
    params.update(kw)
    return FederationConfig.for_parties(parties, Z, kernel, **params)


def test_data_weights(toy1d_parties):
    assert_allclose(data_weights(toy1d_parties), [12 / 40, 20 / 40, 8 / 40])
    with pytest.raises(ConfigError):
        data_weights([PartyDataset(np.zeros((0, 1)), np.zeros(0))])


def test_federation_config_validation(min_kernel, public_grid):
    good = dict(m=2, E=1, T=1, eta=0.5, weights=[0.5, 0.5], Z=public_grid, kernel=min_kernel)
    FederationConfig(**good)
    for bad in (
        dict(weights=[0.6, 0.6]),
        dict(weights=[1.0]),
        dict(weights=[1.0, 0.0]),
        dict(E=0),
        dict(T=0),
        dict(eta=1.0),
        dict(seed=-1),
        dict(workers=0),
    ):
        with pytest.raises(ConfigError):
            FederationConfig(**{**good, **bad})


@pytest.mark.parametrize("seed", range(20))
def test_iterative_protocol_matches_recurrence(seed):
    parties, cfg = random_instance(make_rng(seed), seed)
    assert check_instance(parties, cfg) <= 1e-8


def test_oracle_zero_rounds_and_size_cap(min_kernel, toy1d_parties, public_grid):
    cfg = _fed(toy1d_parties, public_grid, min_kernel)
    assert np.all(dcl_kr_recurrence_oracle(toy1d_parties, cfg, rounds=0) == 0.0)
    big = [PartyDataset(np.linspace(0, 1, ORACLE_MAX_POINTS), np.zeros(ORACLE_MAX_POINTS))]
    with pytest.raises(ConfigError):
        dcl_kr_recurrence_oracle(big, _fed(big, public_grid, min_kernel))


def test_single_party_on_its_own_inputs_is_kernel_gd(min_kernel):
    X = np.linspace(0.03, 1.0, 25)
    D = PartyDataset(X, np.sin(5 * X))
    cfg = _fed([D], X, min_kernel, E=3, T=6)
    f, _ = dcl_kr([D], cfg)
    g = kernel_gd(min_kernel, D, 0.5, 18)
    grid = np.linspace(0, 1, 13)
    assert_allclose(evaluate(f, grid), evaluate(g, grid), atol=1e-8)


def test_party_order_does_not_matter(min_kernel, toy1d_parties, public_grid):
    f, _ = dcl_kr(toy1d_parties, _fed(toy1d_parties, public_grid, min_kernel))
    rev = toy1d_parties[::-1]
    g, _ = dcl_kr(rev, _fed(rev, public_grid, min_kernel))
    assert_allclose(f.coeffs, g.coeffs, atol=1e-10)


def test_worker_count_does_not_change_results(min_kernel, toy1d_parties, public_grid):
    f, t1 = dcl_kr(toy1d_parties, _fed(toy1d_parties, public_grid, min_kernel, workers=1))
    g, t4 = dcl_kr(toy1d_parties, _fed(toy1d_parties, public_grid, min_kernel, workers=4))
    assert_array_equal(f.coeffs, g.coeffs)
    assert_array_equal(t1.consensus, t4.consensus)


def test_round_trace(min_kernel, toy1d_parties, public_grid, rng):
    test = sample_task(TaskSpec("toy1d", noise_sd=0.0), 200, rng)
    f, trace = dcl_kr(toy1d_parties, _fed(toy1d_parties, public_grid, min_kernel, T=5), test=test)
    assert len(trace) == 5
    assert trace.consensus.shape == (5, public_grid.shape[0])
    assert np.all(np.isfinite(trace.rmse))
    assert trace.rmse[-1] == pytest.approx(evaluate_rmse(f, test))
    _, silent = dcl_kr(toy1d_parties, _fed(toy1d_parties, public_grid, min_kernel, T=2))
    assert np.all(np.isnan(silent.rmse))


def test_every_party_shares_the_model_between_rounds(min_kernel, toy1d_parties, public_grid):
    proto = DclKrProtocol(toy1d_parties, _fed(toy1d_parties, public_grid, min_kernel))
    consensus = proto.step()
    assert proto.round == 1
    # the shared model interpolates the consensus on Z
    assert_allclose(gram(min_kernel, public_grid) @ proto.coeffs, consensus, atol=1e-8)


def test_empty_party_is_rejected(min_kernel, public_grid):
    parties = [PartyDataset([0.5], [1.0]), PartyDataset(np.zeros((0, 1)), np.zeros(0))]
    cfg = FederationConfig(m=2, E=1, T=1, eta=0.5, weights=[0.5, 0.5], Z=public_grid, kernel=min_kernel)
    with pytest.raises(ConfigError):
        DclKrProtocol(parties, cfg)


def test_dc_ny_single_party_is_nystrom_krr(min_kernel, toy1d_party, public_grid):
    f = dc_ny([toy1d_party], public_grid, min_kernel, 0.01)
    g = nystrom_krr(min_kernel, toy1d_party, public_grid, 0.01)
    assert_allclose(f.coeffs, g.coeffs)


def test_dc_ny_weights_local_solutions(min_kernel, toy1d_parties, public_grid):
    f = dc_ny(toy1d_parties, public_grid, min_kernel, 0.01)
    w = data_weights(toy1d_parties)
    expected = sum(wi * nystrom_krr(min_kernel, p, public_grid, 0.01).coeffs for wi, p in zip(w, toy1d_parties))
    assert_allclose(f.coeffs, expected, atol=1e-12)


def test_dkrr_fixed_point_is_pooled_nystrom_krr(min_kernel, toy1d_party, public_grid):
    # identical parties make every local preconditioner exact
    lam = 0.01
    pooled = PartyDataset.concat([toy1d_party] * 3)
    target = nystrom_krr(min_kernel, pooled, public_grid, lam)
    one_step = dkrr_ny_cm([toy1d_party] * 3, public_grid, min_kernel, lam, eta=1.0, T=1)
    assert_allclose(evaluate(one_step, public_grid), evaluate(target, public_grid), atol=1e-8)
    many = dkrr_ny_cm([toy1d_party] * 3, public_grid, min_kernel, lam, eta=1.0, T=6)
    assert_allclose(evaluate(many, public_grid), evaluate(target, public_grid), atol=1e-8)


def test_dkrr_zero_rounds_and_bad_lambda(min_kernel, toy1d_parties, public_grid):
    f = dkrr_ny_cm(toy1d_parties, public_grid, min_kernel, 0.01, T=0)
    assert np.all(f.coeffs == 0.0)
    with pytest.raises(ConfigError):
        dkrr_ny_cm(toy1d_parties, public_grid, min_kernel, 0.0)


def test_zero_function_rmse_is_target_norm(min_kernel):
    X = (np.arange(1000) + 0.5) / 1000
    test = PartyDataset(X, TaskSpec("toy1d").target(X))
    zero = RkhsFunction.zero(min_kernel, [0.5])
    # the eigenfunctions are orthonormal, so ||f0*||^2 = sum_i i^-6
    assert evaluate_rmse(zero, test) == pytest.approx(np.sqrt(zeta(6)), rel=0.02)


def test_rmse_examples(min_kernel):
    test = PartyDataset([0.2, 0.8], [0.2, 0.8])
    identity_ish = RkhsFunction(min_kernel, [1.0], [1.0])
    assert evaluate_rmse(identity_ish, test) == 0.0
    with pytest.raises(ConfigError):
        evaluate_rmse(identity_ish, PartyDataset(np.zeros((0, 1)), np.zeros(0)))


def test_zero_labels_give_zero_model_and_traces(min_kernel, toy1d_parties, public_grid):
    silent = [PartyDataset(p.X, np.zeros(p.n)) for p in toy1d_parties]
    test = PartyDataset(np.linspace(0, 1, 30), np.zeros(30))
    f, trace = dcl_kr(silent, _fed(silent, public_grid, min_kernel), test=test)
    assert np.all(f.coeffs == 0.0)
    assert np.all(trace.consensus == 0.0)
    assert np.all(trace.rmse == 0.0)


def test_oracle_single_round_by_hand(min_kernel):
    # one step from zero gives eta S^T y = k(., 0.5); Z interpolates it exactly
    parties = [PartyDataset([0.5], [2.0])]
    cfg = _fed(parties, [0.25, 1.0], min_kernel, E=1, T=1, eta=0.5)
    assert_allclose(dcl_kr_recurrence_oracle(parties, cfg), [0.25, 0.5], atol=1e-14)
    f, _ = dcl_kr(parties, cfg)
    assert_allclose(evaluate(f, [0.25, 1.0]), [0.25, 0.5], atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_protocol_matches_recurrence_on_clustered_public_inputs(min_kernel, seed):
    rng = make_rng(seed, 99)
    parties = []
    for n in (5, 7):
        X = rng.random(n)
        parties.append(PartyDataset(X, np.sin(3.0 * X)))
    center = 0.2 + 0.6 * rng.random()
    Z = np.concatenate([center + 1e-7 * rng.random(6), rng.random(3)])
    cfg = _fed(parties, Z, min_kernel, E=3, T=4)
    assert check_instance(parties, cfg) <= 1e-7


def test_dkrr_first_step_uses_each_party_preconditioner(min_kernel):
    Z = np.array([0.25, 0.5, 0.75])
    parties = [PartyDataset([0.1], [1.0]), PartyDataset([0.3, 0.6, 0.9], [0.5, -1.0, 2.0])]
    lam, eta = 0.1, 0.5
    K_pinv = np.linalg.pinv(np.minimum.outer(Z, Z))
    weights = np.array([0.25, 0.75])
    locals_, rhs = [], np.zeros(3)
    for p in parties:
        kzx = np.minimum.outer(Z, p.X[:, 0])
        locals_.append(K_pinv @ kzx @ kzx.T / p.n)
        rhs += kzx @ p.y
    b = K_pinv @ rhs / 4
    expected = eta * sum(w * np.linalg.solve(M_j + lam * np.eye(3), b) for w, M_j in zip(weights, locals_))
    f = dkrr_ny_cm(parties, Z, min_kernel, lam, eta=eta, T=1)
    assert_allclose(f.coeffs, expected, rtol=1e-10, atol=1e-12)
    # the first step differs from a pooled-preconditioner step on heterogeneous parties
    M = sum(w * M_j for w, M_j in zip(weights, locals_))
    pooled = eta * np.linalg.solve(M + lam * np.eye(3), b)
    assert not np.allclose(f.coeffs, pooled, rtol=1e-6)
