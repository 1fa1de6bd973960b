"""Random forest with class-weighted Gini splits and bootstrap aggregation.

Mechanics pinned for reproducibility:

- tree t trains on a bootstrap sample drawn with seed + t;
- every split samples max(1, floor(log2(d))) candidate features without
  replacement; if all candidates are constant at the node, the remaining
  features are scanned in ascending index order and the first splittable
  one is used;
- split thresholds are midpoints of consecutive distinct sorted values;
- the split maximizing class-weighted Gini gain wins, ties broken by
  lowest feature index then lowest threshold;
- nodes become leaves at the depth limit, on purity, or below 2 samples;
- leaves store the class-weight-scaled count histogram of their rows.

The RNG is consumed in depth-first preorder (node, left subtree, right
subtree), so identical seeds give identical forests regardless of any
parallel training schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..domain import Dataset, LabelEncoding, ProbabilityVector, validate_probability_vector
from ..errors import PipelineError
from .logistic import balanced_class_weights


@dataclass(eq=False)
class Tree:
    """Flat array representation; feature == -1 marks a leaf."""

    feature: np.ndarray  # (nodes,) int64
    threshold: np.ndarray  # (nodes,) float
    left: np.ndarray  # (nodes,) int64
    right: np.ndarray  # (nodes,) int64
    hist: np.ndarray  # (nodes, C) float, weighted class counts at leaves


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[Tree, ...]
    n_trees: int
    max_depth: int
    features_per_split: int
    class_weights: np.ndarray
    seed: int
    encoding: LabelEncoding
    n_features: int


class _TreeBuilder:
    def __init__(self, X, y, class_count, class_weights, max_depth, m_features, rng):
        self.X = X
        self.y = y
        self.class_count = class_count
        self.class_weights = class_weights
        self.max_depth = max_depth
        self.m_features = m_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.hist: list[np.ndarray] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.hist.append(np.zeros(self.class_count))
        return len(self.feature) - 1

    def _node_hist(self, rows: np.ndarray) -> np.ndarray:
        counts = np.bincount(self.y[rows], minlength=self.class_count)
        return counts * self.class_weights

    def _best_split_on(self, rows: np.ndarray, f: int):
        """Best (score, threshold) for one feature, or None if constant."""
        vals = self.X[rows, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        boundaries = np.flatnonzero(sv[:-1] < sv[1:])
        if boundaries.size == 0:
            return None
        sy = self.y[rows][order]
        onehot = np.zeros((rows.size, self.class_count))
        onehot[np.arange(rows.size), sy] = self.class_weights[sy]
        cum = np.cumsum(onehot, axis=0)
        total = cum[-1]
        left = cum[boundaries]
        right = total - left
        w_left = left.sum(axis=1)
        w_right = right.sum(axis=1)
        # maximizing sum-of-squares over children maximizes Gini gain
        score = (left**2).sum(axis=1) / w_left + (right**2).sum(axis=1) / w_right
        best = int(np.argmax(score))  # first max -> lowest threshold
        b = boundaries[best]
        return float(score[best]), float((sv[b] + sv[b + 1]) / 2.0)

    def _choose_split(self, rows: np.ndarray):
        d = self.X.shape[1]
        candidates = np.sort(self.rng.choice(d, size=self.m_features, replace=False))
        best = None  # (score, feature, threshold)
        for f in candidates:
            found = self._best_split_on(rows, int(f))
            if found is not None and (best is None or found[0] > best[0]):
                best = (found[0], int(f), found[1])
        if best is not None:
            return best[1], best[2]
        for f in range(d):
            if f in candidates:
                continue
            found = self._best_split_on(rows, f)
            if found is not None:
                return f, found[1]
        return None

    def build(self, rows: np.ndarray, depth: int) -> int:
        node = self._new_node()
        labels = self.y[rows]
        pure = bool((labels == labels[0]).all())
        if depth >= self.max_depth or rows.size < 2 or pure:
            self.hist[node] = self._node_hist(rows)
            return node
        chosen = self._choose_split(rows)
        if chosen is None:
            self.hist[node] = self._node_hist(rows)
            return node
        f, thr = chosen
        go_left = self.X[rows, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.hist[node] = self._node_hist(rows)
        self.left[node] = self.build(rows[go_left], depth + 1)
        self.right[node] = self.build(rows[~go_left], depth + 1)
        return node

    def finish(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            hist=np.asarray(self.hist, dtype=float),
        )


def train_forest(
    train: Dataset,
    n_trees: int = 100,
    max_depth: int = 20,
    seed: int = 0,
) -> ForestModel:
    if n_trees < 1 or max_depth < 1:
        raise PipelineError("INVALID_CONFIG", "n_trees and max_depth must be >= 1")
    X = train.features
    y = train.labels
    n, d = X.shape
    class_count = train.encoding.class_count
    class_weights = balanced_class_weights(y, class_count)
    m_features = min(d, max(1, int(math.floor(math.log2(d)))))
    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng(seed + t)
        bootstrap = rng.integers(0, n, size=n)
        builder = _TreeBuilder(X[bootstrap], y[bootstrap], class_count, class_weights,
                               max_depth, m_features, rng)
        builder.build(np.arange(n), 0)
        trees.append(builder.finish())
    return ForestModel(
        trees=tuple(trees),
        n_trees=n_trees,
        max_depth=max_depth,
        features_per_split=m_features,
        class_weights=class_weights,
        seed=seed,
        encoding=train.encoding,
        n_features=d,
    )


def _apply_tree(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Leaf index for every row."""
    idx = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        feats = tree.feature[idx]
        active = np.flatnonzero(feats >= 0)
        if active.size == 0:
            return idx
        f = feats[active]
        node = idx[active]
        go_left = X[active, f] <= tree.threshold[node]
        idx[active] = np.where(go_left, tree.left[node], tree.right[node])


def predict_proba_forest_batch(model: ForestModel, features: np.ndarray) -> np.ndarray:
    """Mean over trees of normalized leaf histograms, renormalized."""
    feats = np.atleast_2d(np.asarray(features, dtype=float))
    if feats.shape[1] != model.n_features:
        raise PipelineError(
            "DIMENSION_MISMATCH",
            f"got {feats.shape[1]} features, model expects {model.n_features}",
        )
    class_count = model.trees[0].hist.shape[1]
    acc = np.zeros((feats.shape[0], class_count))
    for tree in model.trees:
        leaves = _apply_tree(tree, feats)
        hist = tree.hist[leaves]
        acc += hist / hist.sum(axis=1, keepdims=True)
    acc /= model.n_trees
    return acc / acc.sum(axis=1, keepdims=True)


def predict_proba_forest(model: ForestModel, features) -> ProbabilityVector:
    probs = predict_proba_forest_batch(model, np.asarray(features, dtype=float).reshape(1, -1))
    return validate_probability_vector(probs[0])
