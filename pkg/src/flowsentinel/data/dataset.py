"""FlowDataset: one label regime's feature matrix, labels, and provenance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatchError
from .labels import LabelVocabulary
from .normalize import FeatureStats


@dataclass
class FlowDataset:
    """Feature matrix + class indices for one classification regime.

    ``stats`` are the normalization statistics fitted on the training
    partition (None while the data is still raw); they travel with the
    dataset so test rows are always scaled with training statistics.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: list
    vocab: LabelVocabulary
    stats: FeatureStats | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X)
        self.y = np.asarray(self.y)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ShapeMismatchError(
                f"X is {self.X.shape} but y has {self.y.shape[0]} labels"
            )
        if self.X.shape[1] != len(self.feature_names):
            raise ShapeMismatchError(
                f"{self.X.shape[1]} columns vs {len(self.feature_names)} feature names"
            )
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.vocab.n_classes):
            raise ShapeMismatchError("label indices outside the vocabulary range")

    @property
    def n_rows(self) -> int:
        return int(self.X.shape[0])

    def subset(self, rows: np.ndarray) -> "FlowDataset":
        return FlowDataset(
            X=self.X[rows],
            y=self.y[rows],
            feature_names=list(self.feature_names),
            vocab=self.vocab,
            stats=self.stats,
        )
