"""Scikit-learn style estimator wrapping the multi-model driver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dataset import Dataset
from .driver import MmlrConfig, predict_batch, run_mmlr, training_mse


class MMLRRegressor(BaseEstimator, RegressorMixin):
    """Piecewise linear regression by iterative subset discovery.

    Fits a set of disjoint row groups, each with its own linear model;
    prediction routes a query to the model owning its nearest training
    row.  Needs at least max(65, 3*n_features) training rows.

    Parameters
    ----------
    epsilon : float, default=0.1
        Coefficient error bound each local model is planned for.
    delta : float, default=0.05
        Allowed probability of exceeding `epsilon`.
    max_models : int, default=10
        Budget on the number of models (1 forces a single global fit).
    min_remaining : int or None, default=None
        Stop iterating once at most this many rows remain; None picks
        2*max(65, 3*n_features).
    p_gate : float, default=0.05
        F-test p-value below which a fit counts as certified.
    adequacy_ratio : float, default=3.0
        Max ratio of a model's residual variance to the ambient noise
        variance for the model to count as adequate.
    max_resample : int, default=50
        Subset re-selection budget per iteration.
    sigma : float or None, default=None
        Known noise standard deviation; estimated locally when None.
    random_state : int, default=0
        Seed for all internal randomness; runs are fully deterministic.

    Attributes
    ----------
    model_set_ : ModelSet
        The fitted models and their row groups.
    train_dataset_ : Dataset
        Training data retained for nearest-neighbor routing.
    n_features_in_ : int
    """

    def __init__(self, epsilon=0.1, delta=0.05, max_models=10, min_remaining=None,
                 p_gate=0.05, adequacy_ratio=3.0, max_resample=50, sigma=None,
                 random_state=0):
        self.epsilon = epsilon
        self.delta = delta
        self.max_models = max_models
        self.min_remaining = min_remaining
        self.p_gate = p_gate
        self.adequacy_ratio = adequacy_ratio
        self.max_resample = max_resample
        self.sigma = sigma
        self.random_state = random_state

    def _config(self) -> MmlrConfig:
        return MmlrConfig(
            epsilon=self.epsilon,
            delta=self.delta,
            max_models=self.max_models,
            min_remaining=self.min_remaining,
            p_gate=self.p_gate,
            adequacy_ratio=self.adequacy_ratio,
            max_resample=self.max_resample,
            sigma_override=self.sigma,
            seed=self.random_state,
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        ds = Dataset.from_arrays(X, y)
        self.model_set_ = run_mmlr(ds, self._config())
        self.train_dataset_ = ds
        self.n_features_in_ = ds.k
        return self

    def predict(self, X):
        check_is_fitted(self, "model_set_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        return predict_batch(self.model_set_, self.train_dataset_, X)

    @property
    def n_models_(self) -> int:
        check_is_fitted(self, "model_set_")
        return self.model_set_.m

    def training_sse_(self) -> float:
        check_is_fitted(self, "model_set_")
        return training_mse(self.model_set_, self.train_dataset_)
