# Copyright (c) 2024 NestedVAE developers
#
# MIT License
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
#
# Random-forest probe: bootstrap-sampled CART trees with Gini splits over random
# feature subsets, majority vote with ties going to the lowest class index.
#
# ===============================================================================================


import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from nestedvae.errors import DimensionError, UsageError
from nestedvae.utils import worker_count

__all__ = [
    'ForestParams',
    'DecisionTree',
    'ForestModel',
    'forest_fit',
    'forest_predict',
]

logger = logging.getLogger(__name__)

LEAF = -1


@dataclass
class ForestParams:
    """
    :param n_trees: number of trees. (Default: `100`.)
    :param max_depth: maximum depth; the root has depth 0. (Default: `12`.)
    :param max_features: features considered per split; ``None`` means ``floor(sqrt(d))``.
    :param min_samples_split: smallest node that may still be split. (Default: `2`.)
    :param bootstrap: resample the training set per tree. (Default: `True`.)
    """

    n_trees: int = 100
    max_depth: int = 12
    max_features: Optional[int] = None
    min_samples_split: int = 2
    bootstrap: bool = True


def _gini_split(x: np.ndarray, y: np.ndarray, n_classes: int):
    # best threshold on one feature: (weighted child impurity, threshold) or None
    order = np.argsort(x, kind='stable')
    xs, ys = x[order], y[order]
    n = xs.size
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), ys] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    right = left[-1] + onehot[-1] - left
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    gini_left = 1.0 - np.sum(left * left, axis=1) / (n_left * n_left)
    gini_right = 1.0 - np.sum(right * right, axis=1) / (n_right * n_right)
    impurity = (n_left * gini_left + n_right * gini_right) / n
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    impurity = np.where(valid, impurity, np.inf)
    k = int(np.argmin(impurity))
    return impurity[k], 0.5 * (xs[k] + xs[k + 1])


class DecisionTree:
    """
    CART classification tree stored as flat arrays. Leaves keep the class histogram of
    the training samples that reached them.
    """

    def __init__(self, n_classes: int, max_depth: int = 12, max_features: Optional[int] = None,
                 min_samples_split: int = 2):
        self.n_classes = n_classes
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.counts: List[np.ndarray] = []

    def _new_node(self, y: np.ndarray) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.counts.append(np.bincount(y, minlength=self.n_classes).astype(np.int64))
        return len(self.feature) - 1

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> 'DecisionTree':
        d = X.shape[1]
        n_features = self.max_features or max(1, int(np.sqrt(d)))
        n_features = min(n_features, d)
        root = self._new_node(y)
        stack = [(root, np.arange(y.size), 0)]
        while stack:
            node, rows, depth = stack.pop()
            ys = y[rows]
            if depth >= self.max_depth or rows.size < self.min_samples_split or np.all(ys == ys[0]):
                continue
            best = None
            for f in rng.choice(d, size=n_features, replace=False):
                found = _gini_split(X[rows, f], ys, self.n_classes)
                if found is not None and (best is None or found[0] < best[0]):
                    best = (found[0], found[1], int(f))
            if best is None:
                continue
            _, threshold, f = best
            go_left = X[rows, f] <= threshold
            left_rows, right_rows = rows[go_left], rows[~go_left]
            self.feature[node] = f
            self.threshold[node] = float(threshold)
            self.left[node] = self._new_node(y[left_rows])
            self.right[node] = self._new_node(y[right_rows])
            stack.append((self.right[node], right_rows, depth + 1))
            stack.append((self.left[node], left_rows, depth + 1))
        self._freeze()
        return self

    def _freeze(self):
        self.feature_ = np.asarray(self.feature, dtype=np.int64)
        self.threshold_ = np.asarray(self.threshold, dtype=np.float64)
        self.left_ = np.asarray(self.left, dtype=np.int64)
        self.right_ = np.asarray(self.right, dtype=np.int64)
        self.leaf_class_ = np.array([int(np.argmax(c)) for c in self.counts], dtype=np.int64)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Index of the leaf each row of ``X`` falls into."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature_[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature_[cur]] <= self.threshold_[cur]
            node[rows] = np.where(go_left, self.left_[cur], self.right_[cur])
            active[rows] = self.feature_[node[rows]] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.leaf_class_[self.apply(X)]


@dataclass
class ForestModel:
    trees: List[DecisionTree]
    n_classes: int
    params: ForestParams
    seeds: List[int] = field(default_factory=list)


def _check_xy(X, y=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError('features must be 2-D, got shape {}'.format(X.shape))
    if y is None:
        return X
    y = np.asarray(y).reshape(-1).astype(np.int64)
    if y.size != X.shape[0]:
        raise DimensionError('{} rows but {} labels'.format(X.shape[0], y.size))
    return X, y


def forest_fit(X, y, params: Optional[ForestParams] = None, seed: int = 0,
               n_classes: Optional[int] = None) -> ForestModel:
    """
    Fit a random forest. Trees are grown in parallel threads, at most
    ``NESTED_FACTOR_THREADS`` at a time; each tree owns a seed spawned from ``seed``,
    so the result does not depend on the thread count.

    :param X: features of shape :math:`(N, d)`.
    :param y: integer labels in ``[0, n_classes)``.
    :param params: :class:`ForestParams`.
    :param seed: seed of the bootstraps and feature subsets.
    :param n_classes: number of classes; defaults to ``max(y) + 1``.
    """
    params = params or ForestParams()
    X, y = _check_xy(X, y)
    if X.shape[0] < 2:
        raise UsageError('need at least 2 training rows, got {}'.format(X.shape[0]))
    if y.min() < 0:
        raise UsageError('labels must be non-negative')
    n_classes = int(y.max()) + 1 if n_classes is None else int(n_classes)
    if y.max() >= n_classes:
        raise UsageError('label {} out of range for {} classes'.format(int(y.max()), n_classes))
    if np.unique(y).size == 1:
        logger.warning('probe trained on a single class (%d); it predicts a constant', int(y[0]))
    children = np.random.SeedSequence(int(seed)).spawn(params.n_trees)

    def grow(child):
        rng = np.random.default_rng(child)
        rows = rng.integers(X.shape[0], size=X.shape[0]) if params.bootstrap else np.arange(X.shape[0])
        tree = DecisionTree(n_classes, params.max_depth, params.max_features, params.min_samples_split)
        return tree.fit(X[rows], y[rows], rng)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        trees = list(pool.map(grow, children))
    logger.debug('fitted %d trees on %d rows', len(trees), X.shape[0])
    return ForestModel(trees, n_classes, params, [int(c.generate_state(1)[0]) for c in children])


def forest_predict(model: ForestModel, X) -> np.ndarray:
    """Majority vote over trees; ties go to the lowest class index."""
    X = _check_xy(X)
    votes = np.zeros((X.shape[0], model.n_classes), dtype=np.int64)
    rows = np.arange(X.shape[0])
    for tree in model.trees:
        np.add.at(votes, (rows, tree.predict(X)), 1)
    return np.argmax(votes, axis=1)
