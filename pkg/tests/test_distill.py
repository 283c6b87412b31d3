import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from dclkr.core.datagen import make_rng
from dclkr.core.distill import (
    center,
    cka,
    cka_grad,
    ensemble_gram,
    feature_gram,
    hsic,
    load_features,
    lr_scale,
    match_features,
    party_self_hsics,
    save_features,
    subsample_rows,
)
from dclkr.core.errors import ConfigError, DegenerateInputError
from . import strategies


def _random_gram(rng, p=10, q=4):
    return feature_gram(rng.standard_normal((p, q)))


def test_center_removes_row_and_column_means(rng):
    C = center(_random_gram(rng))
    assert_allclose(C.sum(axis=0), 0.0, atol=1e-12)
    assert_allclose(C.sum(axis=1), 0.0, atol=1e-12)


def test_cka_of_a_kernel_with_itself(rng):
    K = _random_gram(rng)
    assert cka(K, K) == pytest.approx(1.0, abs=1e-12)


def test_cka_is_scale_invariant(rng):
    K1, K2 = _random_gram(rng), _random_gram(rng)
    assert cka(3.7 * K1, K2) == pytest.approx(cka(K1, K2), abs=1e-12)


def test_hsic_of_constant_gram_is_exactly_zero():
    K = np.full((8, 8), 2.0)
    assert hsic(K, K) == 0.0
    with pytest.raises(DegenerateInputError):
        cka(K, K)


def test_hsic_by_hand():
    K1 = np.array([[1.0, 0.0], [0.0, 1.0]])
    K2 = np.array([[2.0, 1.0], [1.0, 2.0]])
    # H K H for p = 2 keeps only the antisymmetric part (+-1/2 pattern)
    assert hsic(K1, K2) == pytest.approx(0.5 * 0.5 * 4)


@settings(max_examples=30, deadline=None)
@given(strategies.seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_hsic_is_bilinear(seed, a, b):
    rng = make_rng(seed)
    K1, K2, K3 = (_random_gram(rng, 6, 2) for _ in range(3))
    lhs = hsic(a * K1 + b * K2, K3)
    rhs = a * hsic(K1, K3) + b * hsic(K2, K3)
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(lhs)))


@pytest.mark.parametrize("seed", range(20))
def test_cka_grad_matches_finite_differences(seed):
    rng = make_rng(seed)
    F = rng.standard_normal((6, 3))
    Kt = _random_gram(rng, 6, 3)
    grad = cka_grad(F, Kt)
    h = 1e-6
    numeric = np.zeros_like(F)
    for i in range(F.shape[0]):
        for j in range(F.shape[1]):
            up, down = F.copy(), F.copy()
            up[i, j] += h
            down[i, j] -= h
            numeric[i, j] = (cka(feature_gram(up), Kt) - cka(feature_gram(down), Kt)) / (2 * h)
    assert np.linalg.norm(grad - numeric) <= 1e-5 * max(np.linalg.norm(numeric), 1e-8)


@pytest.mark.parametrize("seed", range(50))
def test_ensemble_equals_concatenated_features(seed):
    rng = make_rng(seed)
    m = int(rng.integers(1, 5))
    feats = [rng.standard_normal((7, int(rng.integers(1, 4)))) for _ in range(m)]
    w = rng.dirichlet(np.ones(m))
    w /= w.sum()
    concat = np.hstack([np.sqrt(wi) * F for wi, F in zip(w, feats)])
    assert_allclose(ensemble_gram([feature_gram(F) for F in feats], w), feature_gram(concat), atol=1e-12)


def test_ensemble_gram_validation(rng):
    K = _random_gram(rng)
    with pytest.raises(ConfigError):
        ensemble_gram([K, K], [0.5, 0.6])
    with pytest.raises(ConfigError):
        ensemble_gram([K, K[:5, :5]], [0.5, 0.5])
    with pytest.raises(ConfigError):
        ensemble_gram([K], [0.5, 0.5])


def test_lr_scale():
    assert_array_equal(lr_scale([1.0, 4.0], 0.1), [0.2, 0.1])
    assert_array_equal(lr_scale([2.0], 0.3), [0.3])
    with pytest.raises(DegenerateInputError):
        lr_scale([1.0, 0.0], 0.1)
    with pytest.raises(ConfigError):
        lr_scale([], 0.1)


def test_match_features_raises_alignment(rng):
    F = rng.standard_normal((12, 3))
    target = _random_gram(rng, 12, 2)
    G, history = match_features(F, target, lr=0.1, steps=40)
    assert G.shape == F.shape
    assert len(history) == 41
    assert history[-1] > history[0]


def test_subsample_rows():
    assert_array_equal(subsample_rows(5, 10), np.arange(5))
    idx = subsample_rows(1000, 512, seed=3)
    assert idx.shape == (512,) and np.all(np.diff(idx) > 0)
    assert_array_equal(idx, subsample_rows(1000, 512, seed=3))


def test_party_self_hsics(rng):
    feats = [rng.standard_normal((20, 3)), 2.0 * rng.standard_normal((20, 2))]
    alphas = party_self_hsics(feats)
    assert alphas.shape == (2,) and np.all(alphas > 0)
    with pytest.raises(ConfigError):
        party_self_hsics([feats[0], feats[1][:10]])


def test_feature_csv_roundtrip_is_exact(tmp_path, rng):
    F = rng.standard_normal((6, 3))
    path = tmp_path / "party.csv"
    save_features(F, path)
    assert path.read_text().splitlines()[0] == "0,1,2"
    assert_array_equal(load_features(path), F)


@pytest.mark.parametrize("seed", range(10))
def test_feature_csv_roundtrip_is_exact_for_wide_ranges(tmp_path, seed):
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((20, 4)) * 10.0 ** rng.integers(-12, 12, size=(20, 4))
    path = tmp_path / "wide.csv"
    save_features(F, path)
    assert_array_equal(load_features(path), F)


def test_shape_errors(rng):
    with pytest.raises(ConfigError):
        hsic(np.ones((3, 3)), np.ones((4, 4)))
    with pytest.raises(ConfigError):
        hsic(np.ones((1, 1)), np.ones((1, 1)))
    with pytest.raises(ConfigError):
        cka_grad(rng.standard_normal((5, 2)), _random_gram(rng, 6, 2))
