"""Scikit-learn style front end for the AP position estimator.

Fits the serving AP's 3D position from client positions (X) and SNR readings
in dB (y). Composes with the sklearn ecosystem: get_params/set_params, clone,
and grid search over the descent hyperparameters all work.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_consistent_length

from .geometry import Vec3
from .ranking import EstimatorConfig, SampleSet, estimate_ap_position, make_pairs, rank_loss


class ApPositionEstimator(BaseEstimator):
    """Estimate an access point's position by ranking-loss minimization.

    Parameters mirror EstimatorConfig. After fit():
      position_   estimated AP position, shape (3,)
      loss_       final ranking loss
      n_iter_     gradient-descent iterations performed
      converged_  True when the gradient-norm tolerance was reached
    """

    def __init__(self, learning_rate=0.05, max_iters=5000, grad_tol=1e-7,
                 ceiling_height_m=3.0, pair_strategy="auto", pair_seed=0,
                 snr_scale="linear"):
        self.learning_rate = learning_rate
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.ceiling_height_m = ceiling_height_m
        self.pair_strategy = pair_strategy
        self.pair_seed = pair_seed
        self.snr_scale = snr_scale

    def _config(self, init: Vec3 | None = None) -> EstimatorConfig:
        return EstimatorConfig(
            learning_rate=self.learning_rate, max_iters=self.max_iters,
            grad_tol=self.grad_tol, init=init,
            ceiling_height_m=self.ceiling_height_m,
            pair_strategy=self.pair_strategy, pair_seed=self.pair_seed,
            snr_scale=self.snr_scale)

    def _samples(self, X, y) -> SampleSet:
        X = check_array(X, ensure_min_samples=2)
        y = np.asarray(y, dtype=float).reshape(-1)
        check_consistent_length(X, y)
        if X.shape[1] != 3:
            raise ValueError(f"X must have 3 columns (x, y, z), got {X.shape[1]}")
        return SampleSet.from_db(X, y, scale=self.snr_scale)

    def fit(self, X, y, init: Vec3 | None = None):
        """X: (n, 3) client positions in meters; y: (n,) SNR in dB."""
        samples = self._samples(X, y)
        result = estimate_ap_position(samples, self._config(init))
        self.position_ = np.array(result.position.as_tuple())
        self.loss_ = result.loss
        self.n_iter_ = result.n_iter
        self.converged_ = result.converged
        return self

    def score(self, X, y) -> float:
        """Negative ranking loss of the fitted position on (X, y)."""
        if not hasattr(self, "position_"):
            raise AttributeError("estimator is not fitted; call fit() first")
        samples = self._samples(X, y)
        pairs = make_pairs(len(samples), self.pair_strategy, self.pair_seed)
        return -rank_loss(Vec3(*self.position_), samples, pairs)
