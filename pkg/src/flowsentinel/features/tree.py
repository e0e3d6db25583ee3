"""Regression tree (CART) with greedy variance-reduction splits.

Each split node records its *weighted* impurity decrease

    (n_node / n_root) * (var(node) - (n_L * var(L) + n_R * var(R)) / n_node)

which is what the forest sums into per-feature importances. Rows with
feature value <= threshold go left; thresholds are midpoints between
adjacent distinct sorted values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import EmptyInputError
from ..rng import Rng


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 5
    features_per_split: Optional[int] = None  # None -> ceil(sqrt(d))
    bootstrap: bool = True
    seed: int = 0

    def resolve_features_per_split(self, d: int) -> int:
        k = self.features_per_split if self.features_per_split is not None else int(np.ceil(np.sqrt(d)))
        if not 1 <= k <= d:
            raise ValueError(f"features_per_split must be in [1, {d}], got {k}")
        return k


@dataclass
class TreeNode:
    """Leaf when ``feature`` is None, internal split otherwise."""

    n_samples: int
    prediction: float = 0.0
    feature: Optional[int] = None
    threshold: float = 0.0
    impurity_decrease: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _variance(y: np.ndarray) -> float:
    return float(np.mean((y - y.mean()) ** 2)) if y.size else 0.0


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best (threshold, variance decrease) for one feature, or None.

    Vectorized over all candidate cut points using prefix sums of y and y^2.
    """
    n = y.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    s1 = np.cumsum(ys)
    s2 = np.cumsum(ys * ys)
    total1 = s1[-1]
    total2 = s2[-1]

    # cut after position i: left = [0..i], right = [i+1..n-1]
    i = np.arange(min_leaf - 1, n - min_leaf)
    if i.size == 0:
        return None
    distinct = xs[i] < xs[i + 1]
    i = i[distinct]
    if i.size == 0:
        return None
    n_l = (i + 1).astype(np.float64)
    n_r = n - n_l
    var_l = np.maximum(s2[i] / n_l - (s1[i] / n_l) ** 2, 0.0)
    var_r = np.maximum((total2 - s2[i]) / n_r - ((total1 - s1[i]) / n_r) ** 2, 0.0)
    parent = max(total2 / n - (total1 / n) ** 2, 0.0)
    decrease = parent - (n_l * var_l + n_r * var_r) / n
    best = int(np.argmax(decrease))
    if decrease[best] <= 0.0:
        return None
    cut = i[best]
    threshold = 0.5 * (xs[cut] + xs[cut + 1])
    return float(threshold), float(decrease[best])


def fit_tree(X: np.ndarray, y: np.ndarray, config: ForestConfig, rng: Rng) -> TreeNode:
    """Grow one regression tree on (X, y)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInputError("fit_tree requires a non-empty 2-D feature matrix")
    if y.shape[0] != X.shape[0]:
        raise EmptyInputError("feature matrix and target length disagree")
    n_root, d = X.shape
    k = config.resolve_features_per_split(d)

    def grow(rows: np.ndarray, depth: int) -> TreeNode:
        y_node = y[rows]
        node = TreeNode(n_samples=rows.size, prediction=float(y_node.mean()))
        if (
            depth >= config.max_depth
            or rows.size < 2 * config.min_samples_leaf
            or _variance(y_node) <= 0.0
        ):
            return node
        candidates = rng.choice(d, k)
        best = None  # (decrease, feature, threshold)
        for f in candidates:
            found = _best_split(X[rows, f], y_node, config.min_samples_leaf)
            if found is None:
                continue
            threshold, decrease = found
            if best is None or decrease > best[0]:
                best = (decrease, int(f), threshold)
        if best is None:
            return node
        decrease, feature, threshold = best
        go_left = X[rows, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.impurity_decrease = (rows.size / n_root) * decrease
        node.left = grow(rows[go_left], depth + 1)
        node.right = grow(rows[~go_left], depth + 1)
        return node

    return grow(np.arange(n_root), 0)


def predict_tree(node: TreeNode, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0], dtype=np.float64)

    def fill(n: TreeNode, rows: np.ndarray) -> None:
        if n.is_leaf:
            out[rows] = n.prediction
            return
        go_left = X[rows, n.feature] <= n.threshold
        fill(n.left, rows[go_left])
        fill(n.right, rows[~go_left])

    fill(node, np.arange(X.shape[0]))
    return out


def tree_feature_decreases(node: TreeNode, d: int) -> np.ndarray:
    """Sum of weighted impurity decreases per feature over one tree."""
    totals = np.zeros(d, dtype=np.float64)
    stack = [node]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            continue
        totals[n.feature] += n.impurity_decrease
        stack.extend((n.left, n.right))
    return totals
