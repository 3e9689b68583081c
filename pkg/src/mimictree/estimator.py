"""scikit-learn compatible wrapper around tree growth and pruning."""
from __future__ import annotations

from numbers import Integral, Real

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils._param_validation import Interval, StrOptions
from sklearn.utils.validation import check_is_fitted, validate_data

from .tree import HEURISTIC_NAMES, NORMS, GrowthConfig, PruneConfig, grow_arrays, prune_arrays


class LinearModelTreeRegressor(RegressorMixin, BaseEstimator):
    """Regression tree with least-squares linear models in its leaves.

    Parameters
    ----------
    heuristic : {"variance", "ttest", "segmented", "gmm"}, default="variance"
        How each feature proposes its split threshold.
    min_samples_leaf : int, default=100
        Minimum number of training rows in every leaf.
    max_depth : int, default=12
    max_nodes : int or None, default=None
        Hard cap on the node count.
    prune_lambda : float or None, default=None
        Complexity penalty for bottom-up pruning; ``None`` skips pruning.
    prune_norm : {"l0", "l1", "l2"}, default="l0"
    ridge_eps : float, default=1e-8
        Stabiliser added to the leaf normal equations.
    random_state : int, default=0
        Seed for the mixture heuristic's initialisation.
    n_jobs : int, default=1
        Threads used to score features at a node.

    Attributes
    ----------
    tree_ : ModelTree
    n_features_in_ : int
    feature_importances_ : ndarray of shape (n_features_in_,)
        Summed variance reduction of the splits on each feature.
    """

    _parameter_constraints: dict = {
        "heuristic": [StrOptions(set(HEURISTIC_NAMES))],
        "min_samples_leaf": [Interval(Integral, 2, None, closed="left")],
        "max_depth": [Interval(Integral, 1, None, closed="left")],
        "max_nodes": [Interval(Integral, 1, None, closed="left"), None],
        "prune_lambda": [Interval(Real, 0, None, closed="left"), None],
        "prune_norm": [StrOptions(set(NORMS))],
        "ridge_eps": [Interval(Real, 0, None, closed="left")],
        "random_state": [Interval(Integral, 0, None, closed="left")],
        "n_jobs": [Interval(Integral, 1, None, closed="left")],
    }

    def __init__(self, heuristic="variance", min_samples_leaf=100, max_depth=12, max_nodes=None,
                 prune_lambda=None, prune_norm="l0", ridge_eps=1e-8, random_state=0, n_jobs=1):
        self.heuristic = heuristic
        self.min_samples_leaf = min_samples_leaf
        self.max_depth = max_depth
        self.max_nodes = max_nodes
        self.prune_lambda = prune_lambda
        self.prune_norm = prune_norm
        self.ridge_eps = ridge_eps
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _growth_config(self) -> GrowthConfig:
        return GrowthConfig(heuristic=self.heuristic, min_leaf=self.min_samples_leaf,
                            max_depth=self.max_depth, max_nodes=self.max_nodes,
                            seed=self.random_state, ridge_eps=self.ridge_eps, n_jobs=self.n_jobs)

    def fit(self, X, y):
        self._validate_params()
        X, y = validate_data(self, X, y, dtype=np.float64, y_numeric=True)
        names = getattr(self, "feature_names_in_", None)
        tree = grow_arrays(X, y, self._growth_config(),
                           None if names is None else [str(n) for n in names])
        if self.prune_lambda is not None:
            tree = prune_arrays(tree, X, y, PruneConfig(self.prune_lambda, self.prune_norm))
        self.tree_ = tree
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return self.tree_.predict_batch(X)

    def apply(self, X):
        """Leaf id reached by each row."""
        check_is_fitted(self, "tree_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return self.tree_.apply(X)

    @property
    def feature_importances_(self) -> np.ndarray:
        check_is_fitted(self, "tree_")
        out = np.zeros(self.tree_.n_features)
        for nd in self.tree_.internal_nodes():
            out[nd.feature] += nd.variance_reduction
        return out
