import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from slra import InvalidArgumentError, SchattenLRA, SketchedSchattenLRA, StableLazySVD, SpectrumSpec, planted_matrix
from slra.estimators import validate_matrix, validate_rank, validate_seed
from slra.metrics import optimal_error

ESTIMATORS = [
    SchattenLRA(n_components=3, p=3, random_state=0),
    SketchedSchattenLRA(n_components=3, p=4, row_multiplier=0.1, random_state=0),
    SketchedSchattenLRA(n_components=3, p=4, method="lw", row_multiplier=0.1, random_state=0),
    StableLazySVD(n_components=3, random_state=0),
]


@pytest.fixture(scope="module")
def X():
    return planted_matrix(SpectrumSpec(kind="gapped", n=60, head_values=[10, 8, 6], seed=5, m=80))


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
def test_fit_transform_roundtrip(est, X):
    est = clone(est)
    Z = est.fit_transform(X)
    assert Z.shape == (80, 3)
    W = est.components_
    assert np.linalg.norm(W @ W.T - np.eye(3)) <= 1e-8
    back = est.inverse_transform(Z)
    p = est._score_p
    err = est.reconstruction_error(X)
    assert err == pytest.approx(np.linalg.svd(X - back, compute_uv=False).max() if p == np.inf
                                else np.sum(np.linalg.svd(X - back, compute_uv=False) ** p) ** (1 / p), rel=1e-10)
    assert err <= 1.3 * optimal_error(X, 3, p)
    assert est.score(X) == -err


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
def test_params_roundtrip(est):
    params = est.get_params()
    assert clone(est).get_params() == params
    assert params["n_components"] == 3


def test_set_params_and_refit(X):
    est = SchattenLRA(n_components=2, random_state=1).set_params(n_components=4)
    assert est.fit(X).components_.shape == (4, 60)


def test_seed_reproducibility(X):
    a = SchattenLRA(n_components=3, random_state=7).fit(X).components_
    b = SchattenLRA(n_components=3, random_state=7).fit(X).components_
    np.testing.assert_array_equal(a, b)


def test_pipeline(X):
    pipe = make_pipeline(StandardScaler(), StableLazySVD(n_components=2, random_state=0))
    assert pipe.fit_transform(X).shape == (80, 2)


def test_not_fitted_and_feature_mismatch(X):
    est = SchattenLRA(n_components=2)
    with pytest.raises(NotFittedError):
        est.transform(X)
    est.fit(X)
    with pytest.raises(InvalidArgumentError):
        est.transform(X[:, :10])


def test_fitted_attributes(X):
    est = SchattenLRA(n_components=3, random_state=0).fit(X)
    assert est.branch_ in ("W1", "W2", "ExactFallback") and est.n_features_in_ == 60
    lazy = StableLazySVD(n_components=3, random_state=0, mantissa_bits=30).fit(X)
    assert lazy.kappa_ <= 4 and lazy.directions_.shape == (3, 60)


def test_validation_helpers():
    with pytest.raises(ValueError):
        validate_matrix([[1.0, np.nan]])
    with pytest.raises(ValueError):
        validate_matrix([1.0, 2.0])
    X = validate_matrix([[1, 2], [3, 4]])
    assert X.dtype == np.float64
    assert validate_rank(np.int64(2), X) == 2
    for bad in (0, 3, 1.5, True):
        with pytest.raises(InvalidArgumentError):
            validate_rank(bad, X)
    assert validate_seed(None) == 0 and validate_seed(np.int32(4)) == 4
    with pytest.raises(InvalidArgumentError):
        validate_seed(np.random.default_rng(0))


def test_unknown_method(X):
    with pytest.raises(InvalidArgumentError):
        SketchedSchattenLRA(n_components=2, method="fast").fit(X)
