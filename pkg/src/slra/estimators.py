"""scikit-learn estimators wrapping the low-rank solvers.

Each estimator learns ``components_``, an orthonormal ``k x n_features``
matrix whose row span approximately minimizes the Schatten-p error of
``X (I - W W^T)``.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .cost_model import CostModelParams
from .exceptions import InvalidArgumentError
from .lazysvd import modified_lazysvd
from .linalg import orthonormalize, schatten_norm
from .precision import PrecisionConfig
from .schatten import schatten_lra
from .sketch import SketchConfig, combined_lra, lw_lra


def validate_matrix(X, *, min_samples: int = 1, min_features: int = 1) -> np.ndarray:
    """Dense finite float64 2-d array."""
    return check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True,
                       ensure_min_samples=min_samples, ensure_min_features=min_features)


def validate_rank(k, X) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise InvalidArgumentError(f"n_components must be an integer, got {k!r}")
    if not 1 <= k <= min(X.shape):
        raise InvalidArgumentError(f"n_components must lie in [1, {min(X.shape)}], got {k}")
    return int(k)


def validate_seed(random_state) -> int:
    if random_state is None:
        return 0
    if isinstance(random_state, (int, np.integer)) and not isinstance(random_state, bool):
        return int(random_state)
    raise InvalidArgumentError("random_state must be an integer or None")


class _LowRankBase(TransformerMixin, BaseEstimator):
    _score_p = 2.0

    def _fit_components(self, X, k, seed):
        raise NotImplementedError

    def fit(self, X, y=None):
        X = validate_matrix(X)
        k = validate_rank(self.n_components, X)
        W = self._fit_components(X, k, validate_seed(self.random_state))
        self.components_ = W.T
        self.n_features_in_ = X.shape[1]
        return self

    def _check(self, X):
        check_is_fitted(self, "components_")
        X = validate_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise InvalidArgumentError(
                f"X has {X.shape[1]} features, the estimator was fitted with {self.n_features_in_}")
        return X

    def transform(self, X):
        return self._check(X) @ self.components_.T

    def inverse_transform(self, Xt):
        check_is_fitted(self, "components_")
        Xt = check_array(Xt, dtype=np.float64)
        return Xt @ self.components_

    def reconstruction_error(self, X, p=None) -> float:
        X = self._check(X)
        W = self.components_.T
        return schatten_norm(X - (X @ W) @ W.T, self._score_p if p is None else p)

    def score(self, X, y=None) -> float:
        """Negative Schatten-p reconstruction error (higher is better)."""
        return -self.reconstruction_error(X)


class SchattenLRA(_LowRankBase):
    """Dual-block Krylov rank-``k`` approximation in Schatten-``p`` norm."""

    def __init__(self, n_components=5, p=2.0, epsilon=0.25, iteration_multiplier=1.0,
                 saturation="exact", omega=2.371, alpha=0.31, random_state=None):
        self.n_components = n_components
        self.p = p
        self.epsilon = epsilon
        self.iteration_multiplier = iteration_multiplier
        self.saturation = saturation
        self.omega = omega
        self.alpha = alpha
        self.random_state = random_state

    @property
    def _score_p(self):
        return self.p

    def _fit_components(self, X, k, seed):
        sol = schatten_lra(X, k, self.p, self.epsilon, seed=seed,
                           cost=CostModelParams(self.omega, self.alpha),
                           iteration_multiplier=self.iteration_multiplier,
                           saturation=self.saturation)
        self.branch_ = sol.branch
        self.counters_ = dict(sol.counters)
        return sol.W


class SketchedSchattenLRA(_LowRankBase):
    """SRHT sketch-and-solve approximation for ``p > 2``.

    ``method="lw"`` takes the SVD of the doubly sketched matrix;
    ``method="combined"`` solves the truncated problem on the left sketch
    with the Krylov solver.
    """

    def __init__(self, n_components=5, p=4.0, epsilon=0.3, method="combined",
                 row_multiplier=1.0, col_multiplier=1.0, random_state=None):
        self.n_components = n_components
        self.p = p
        self.epsilon = epsilon
        self.method = method
        self.row_multiplier = row_multiplier
        self.col_multiplier = col_multiplier
        self.random_state = random_state

    @property
    def _score_p(self):
        return self.p

    def _fit_components(self, X, k, seed):
        if self.method not in ("lw", "combined"):
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        cfg = SketchConfig(self.p, k, self.epsilon, self.row_multiplier, seed,
                           col_multiplier=self.col_multiplier)
        res = lw_lra(X, cfg) if self.method == "lw" else combined_lra(X, cfg)
        self.sketch_rows_ = res.s
        self.sketch_degenerate_ = res.sketch_degenerate
        self.counters_ = dict(res.counters)
        return res.Z


class StableLazySVD(_LowRankBase):
    """Modified LazySVD; the fitted span is good for every ``p >= 2`` at once.

    ``mantissa_bits`` below 52 runs the solver in emulated reduced precision.
    """

    _score_p = math.inf

    def __init__(self, n_components=5, epsilon=0.1, eta=0.1, eps_pca=None,
                 mantissa_bits=None, random_state=None):
        self.n_components = n_components
        self.epsilon = epsilon
        self.eta = eta
        self.eps_pca = eps_pca
        self.mantissa_bits = mantissa_bits
        self.random_state = random_state

    def _fit_components(self, X, k, seed):
        precision = None
        if self.mantissa_bits is not None and self.mantissa_bits < 52:
            precision = PrecisionConfig(int(self.mantissa_bits))
        state = modified_lazysvd(X, k, self.epsilon, self.eta, seed,
                                 eps_pca=self.eps_pca, precision=precision)
        self.directions_ = state.V.T
        self.kappa_ = state.kappa_estimate
        self.matvecs_ = state.matvecs
        self.history_ = state.history
        return orthonormalize(state.V)
