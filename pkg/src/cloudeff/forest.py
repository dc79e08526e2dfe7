"""Random forest regression: bagged CART trees with per-node feature subsets."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from ._rng import make_rng


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = 12
    min_samples_leaf: int = 2
    mtry: int | None = None  # None -> ceil(p / 3)
    bootstrap: bool = True
    seed: int = 0

    def validate(self, n_features):
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0 or None, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ValueError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        mtry = self.resolved_mtry(n_features)
        if not 1 <= mtry <= n_features:
            raise ValueError(f"mtry must lie in [1, {n_features}], got {mtry}")

    def resolved_mtry(self, n_features):
        return math.ceil(n_features / 3) if self.mtry is None else int(self.mtry)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True, eq=False)
class Tree:
    """Array-encoded regression tree; node 0 is the root, ``feature == -1`` marks leaves.

    Samples with ``x[feature] <= threshold`` go to ``left``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    def predict(self, X):
        return kernels.tree_apply(self.feature, self.threshold, self.left, self.right, self.value, X)

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    def depth(self, node=0):
        if self.feature[node] < 0:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))

    def to_dict(self, node=0):
        if self.feature[node] < 0:
            return {"value": float(self.value[node]), "n_samples": int(self.n_samples[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "n_samples": int(self.n_samples[node]),
            "left": self.to_dict(self.left[node]),
            "right": self.to_dict(self.right[node]),
        }

    @classmethod
    def from_dict(cls, data):
        builder = _TreeBuilder()

        def visit(rec):
            node = builder.add(int(rec["n_samples"]))
            if "value" in rec:
                builder.make_leaf(node, float(rec["value"]))
            else:
                builder.make_split(node, int(rec["feature"]), float(rec["threshold"]))
                builder.left[node] = visit(rec["left"])
                builder.right[node] = visit(rec["right"])
            return node

        visit(data)
        return builder.finish()


class _TreeBuilder:
    def __init__(self):
        self.feature, self.threshold, self.left, self.right = [], [], [], []
        self.value, self.n_samples = [], []

    def add(self, n_samples):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.n_samples.append(n_samples)
        return len(self.feature) - 1

    def make_leaf(self, node, value):
        self.value[node] = value

    def make_split(self, node, feature, threshold):
        self.feature[node] = feature
        self.threshold[node] = threshold

    def finish(self):
        return Tree(
            np.array(self.feature, dtype=np.intp),
            np.array(self.threshold, dtype=np.float64),
            np.array(self.left, dtype=np.intp),
            np.array(self.right, dtype=np.intp),
            np.array(self.value, dtype=np.float64),
            np.array(self.n_samples, dtype=np.intp),
        )


def best_split(X, y, candidate_features, min_samples_leaf=1):
    """Best SSE-reducing split of ``(X, y)`` over ``candidate_features``.

    Thresholds are midpoints between consecutive distinct sorted values. Ties
    go to the lower feature index, then the lower threshold. Returns
    ``(feature, threshold, sse_reduction)`` or ``None``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    features = np.sort(np.asarray(candidate_features, dtype=np.intp))
    f, thr, gain = kernels.best_split(X, y, features, int(min_samples_leaf))
    if f < 0:
        return None
    return int(f), float(thr), float(gain)


def _leaf_value(y):
    # an all-equal node must reproduce its target bit-for-bit
    if y[0] == y.min() == y.max():
        return float(y[0])
    return float(np.mean(y))


def fit_tree(X, y, config, rng):
    n_features = X.shape[1]
    mtry = config.resolved_mtry(n_features)
    max_depth = math.inf if config.max_depth is None else config.max_depth
    msl = config.min_samples_leaf
    builder = _TreeBuilder()
    root = builder.add(y.shape[0])
    # depth-first, left subtree before right, so RNG draws follow a fixed order
    stack = [(root, np.arange(y.shape[0]), 0)]
    while stack:
        node, rows, depth = stack.pop()
        y_node = y[rows]
        split = None
        if depth < max_depth and rows.shape[0] >= 2 * msl:
            if mtry < n_features:
                candidates = rng.choice(n_features, size=mtry, replace=False)
            else:
                candidates = np.arange(n_features)
            split = best_split(X[rows], y_node, candidates, msl)
        if split is None:
            builder.make_leaf(node, _leaf_value(y_node))
            continue
        f, thr, _ = split
        go_left = X[rows, f] <= thr
        left_rows, right_rows = rows[go_left], rows[~go_left]
        builder.make_split(node, f, thr)
        left = builder.add(left_rows.shape[0])
        right = builder.add(right_rows.shape[0])
        builder.left[node], builder.right[node] = left, right
        stack.append((right, right_rows, depth + 1))
        stack.append((left, left_rows, depth + 1))
    return builder.finish()


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple
    config: ForestConfig
    n_features: int

    def _check(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        return X

    def tree_predictions(self, X):
        """Per-tree predictions, shape (n_trees, n_samples)."""
        X = self._check(X)
        return np.stack([tree.predict(X) for tree in self.trees])

    def predict(self, X):
        per_tree = self.tree_predictions(X)
        # correctly rounded sum, so unanimous trees give back their shared value
        n = per_tree.shape[0]
        return np.array([math.fsum(column) / n for column in per_tree.T], dtype=np.float64)

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "n_features": self.n_features,
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            tuple(Tree.from_dict(t) for t in data["trees"]),
            ForestConfig.from_dict(data["config"]),
            int(data["n_features"]),
        )


def fit_forest(train, config=ForestConfig()):
    """Fit a forest on a :class:`~cloudeff.dataset.Dataset` (raw, unscaled features)."""
    return fit_arrays(train.features, train.target, config)


def fit_arrays(X, y, config=ForestConfig()):
    """Fit a forest on a feature matrix and target vector.

    Tree ``i`` draws its bootstrap sample and split candidates from a stream
    keyed on ``(config.seed, i)``, so trees can be built in any order.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"incompatible shapes {X.shape} and {y.shape}")
    n = y.shape[0]
    if n == 0:
        raise ValueError("cannot fit a forest on an empty training set")
    config.validate(X.shape[1])
    trees = []
    for i in range(config.n_trees):
        rng = make_rng(config.seed, 0xF0357, i)
        if config.bootstrap:
            rows = rng.integers(0, n, size=n)
            trees.append(fit_tree(X[rows], y[rows], config, rng))
        else:
            trees.append(fit_tree(X, y, config, rng))
    return ForestModel(tuple(trees), config, X.shape[1])


def predict_forest(model, x):
    """Mean of the per-tree predictions for one feature row."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict_forest takes a single feature row")
    return float(model.predict(x)[0])
