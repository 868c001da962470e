"""Random-forest regressor whose per-tree predictions supply the uncertainty.

Trees are grown by the kernels in :mod:`disco.kernels` (compiled when
available): bootstrap resampling, ``max(1, q // 3)`` candidate features per
split, growth until leaves are pure or hold fewer than two samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import InsufficientDataError, ShapeError
from ..seeding import derive_seed
from .output import EstimatorOutput

DEFAULT_N_TREES = 100


@dataclass(frozen=True)
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_node_samples: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def predict(self, X) -> np.ndarray:
        return kernels.predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value, X
        )


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[RegressionTree, ...]
    q: int
    max_features: int
    bootstrap: bool

    @property
    def m(self) -> int:
        return len(self.trees)


def train_random_forest(
    features,
    outcomes,
    m: int = DEFAULT_N_TREES,
    rng_seed: int = 0,
    max_features: int | None = None,
    bootstrap: bool = True,
    min_samples_split: int = 2,
) -> RandomForestModel:
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.ascontiguousarray(outcomes, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"features {X.shape} and outcomes {y.shape} do not align")
    n, q = X.shape
    if n < 1:
        raise InsufficientDataError("cannot grow a forest on zero rows")
    if m < 1:
        raise ValueError("a forest needs at least one tree")
    if max_features is None:
        max_features = max(1, q // 3)

    trees = []
    for j in range(m):
        if bootstrap:
            rng = np.random.default_rng(derive_seed(rng_seed, "bootstrap", j))
            sample = rng.integers(0, n, size=n)
        else:
            sample = np.arange(n)
        arrays = kernels.build_tree(
            X, y, sample, max_features, min_samples_split, derive_seed(rng_seed, "split", j)
        )
        trees.append(RegressionTree(*arrays))
    return RandomForestModel(tuple(trees), q=q, max_features=max_features, bootstrap=bootstrap)


def rf_predict(model: RandomForestModel, features) -> EstimatorOutput:
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.q:
        raise ShapeError(f"expected (n, {model.q}) features, got {X.shape}")
    per_tree = np.column_stack([t.predict(X) for t in model.trees])
    return EstimatorOutput.from_members(per_tree)
