"""Random-forest regressor for impurity-based feature ranking.

The forest exists to score features, not to ship a general-purpose
regressor: importances are the per-tree weighted impurity decreases summed
per feature, averaged over trees, then normalized to sum to 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyInputError, KTooLargeError
from ..rng import Rng
from .tree import ForestConfig, fit_tree, predict_tree, tree_feature_decreases


@dataclass
class ImportanceReport:
    ranking: list  # [(feature_name, importance)], descending
    degenerate: bool  # True when no tree ever split (all importances zero)

    def importance_of(self, name: str) -> float:
        for feature, value in self.ranking:
            if feature == name:
                return value
        raise KeyError(name)

    def total(self) -> float:
        return float(sum(v for _, v in self.ranking))


def fit_forest(X: np.ndarray, y: np.ndarray, config: ForestConfig) -> list:
    """Fit ``config.n_trees`` trees on seeded bootstrap resamples.

    Every tree draws from its own spawned substream, so a parallel
    implementation would reproduce the sequential result exactly.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInputError("fit_forest requires a non-empty 2-D feature matrix")
    n = X.shape[0]
    root = Rng(config.seed)
    trees = []
    for t in range(config.n_trees):
        rng = root.spawn(f"tree-{t}")
        if config.bootstrap:
            rows = rng.integers(n, n)
            trees.append(fit_tree(X[rows], y[rows], config, rng))
        else:
            trees.append(fit_tree(X, y, config, rng))
    return trees


def predict_forest(trees: list, X: np.ndarray) -> np.ndarray:
    if not trees:
        raise EmptyInputError("empty forest")
    preds = np.zeros(np.asarray(X).shape[0], dtype=np.float64)
    for tree in trees:
        preds += predict_tree(tree, X)
    return preds / len(trees)


def compute_importances(trees: list, feature_names: list) -> ImportanceReport:
    """Average per-feature impurity decrease over trees, normalized to sum 1."""
    if not trees:
        raise EmptyInputError("empty forest")
    d = len(feature_names)
    totals = np.zeros(d, dtype=np.float64)
    for tree in trees:
        totals += tree_feature_decreases(tree, d)
    totals /= len(trees)
    grand = totals.sum()
    degenerate = grand <= 0.0
    if not degenerate:
        totals = totals / grand
    ranking = sorted(zip(feature_names, totals.tolist()), key=lambda kv: (-kv[1], kv[0]))
    return ImportanceReport(ranking=ranking, degenerate=degenerate)


def select_top_k(report: ImportanceReport, k: int) -> list:
    """First k feature names by descending importance (ties lexicographic)."""
    if k > len(report.ranking):
        raise KTooLargeError(f"k={k} exceeds {len(report.ranking)} features")
    return [name for name, _ in report.ranking[:k]]


def export_importance_csv(report: ImportanceReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("feature,importance\n")
        for name, value in report.ranking:
            fh.write(f"{name},{value:.10f}\n")
