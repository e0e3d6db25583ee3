"""Deterministic training loop and the evaluation suite.

Training carves a stratified validation set out of the training rows, then
runs seeded shuffle -> mini-batch forward/loss/backward/Adam for a fixed
number of epochs. Everything stochastic (validation carve-out, epoch
shuffles, dropout masks) draws from substreams spawned off one seed, so a
(seed, data, config) triple reproduces the run bit-for-bit.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .data.labels import ClassificationMode
from .data.splits import stratified_split
from .errors import (
    ConfigError,
    EmptyInputError,
    ModeMismatchError,
    NonFiniteLossError,
)
from .models import Model
from .nn import Adam
from .nn.losses import (
    binary_cross_entropy,
    binary_logit_grad,
    sparse_categorical_cross_entropy,
    sparse_categorical_logit_grad,
)

# The learning rate is architecture-specific when not set explicitly: the
# LSTM trains at 1e-4, the CNN at the common Adam default.
DEFAULT_LEARNING_RATES = {"cnn": 0.001, "lstm": 0.0001}


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 256
    learning_rate: float | None = None  # None -> architecture default
    seed: int = 0
    validation_fraction: float = 0.1
    shuffle_each_epoch: bool = True

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")

    def resolve_learning_rate(self, architecture: str) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return DEFAULT_LEARNING_RATES[architecture]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    seconds: float


@dataclass
class TrainHistory:
    epochs: list = field(default_factory=list)  # EpochRecord per epoch

    def final(self) -> EpochRecord:
        return self.epochs[-1]


def _check_mode(model: Model, y: np.ndarray) -> None:
    n_classes = model.spec.mode.class_count
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ModeMismatchError(
            f"labels span [{y.min()}, {y.max()}] but model mode "
            f"{model.spec.mode.value!r} expects [0, {n_classes})"
        )


def _batch_loss_and_grad(model: Model, probs: np.ndarray, y: np.ndarray):
    if model.spec.mode is ClassificationMode.BINARY:
        loss = binary_cross_entropy(probs[:, 0], y)
        grad = binary_logit_grad(probs, y)
    else:
        loss = sparse_categorical_cross_entropy(probs, y)
        grad = sparse_categorical_logit_grad(probs, y)
    return loss, grad.astype(probs.dtype, copy=False)


def _batched_eval(model: Model, X: np.ndarray, y: np.ndarray, batch_size: int = 4096):
    """(mean loss, accuracy) without touching training state."""
    total_loss = 0.0
    correct = 0
    for start in range(0, X.shape[0], batch_size):
        xb = X[start:start + batch_size]
        yb = y[start:start + batch_size]
        probs = model.forward(xb, training=False)
        loss, _ = _batch_loss_and_grad(model, probs, yb)
        total_loss += loss * xb.shape[0]
        if model.spec.mode is ClassificationMode.BINARY:
            pred = (probs[:, 0] >= 0.5).astype(np.int64)
        else:
            pred = probs.argmax(axis=1)
        correct += int((pred == yb).sum())
    return total_loss / X.shape[0], correct / X.shape[0]


def train(model: Model, X: np.ndarray, y: np.ndarray, config: TrainConfig):
    """Train in place; returns the TrainHistory.

    ``X`` is the normalized training matrix (the 80% side of the outer
    split); a further ``validation_fraction`` is carved out of it here,
    stratified, and never trained on.
    """
    config.validate()
    X = np.asarray(X, dtype=np.float32)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise EmptyInputError("no training rows")
    if X.shape[0] != y.shape[0]:
        raise ModeMismatchError("feature matrix and label vector row counts disagree")
    _check_mode(model, y)

    carve = stratified_split(y, 1.0 - config.validation_fraction, seed=config.seed)
    train_idx, val_idx = carve.train, carve.test
    X_tr, y_tr = X[train_idx], y[train_idx]
    X_val, y_val = X[val_idx], y[val_idx]

    from .rng import Rng

    root = Rng(config.seed)
    model.bind_dropout_rng(root.spawn("dropout"))
    optimizer = Adam(model.parameters(), lr=config.resolve_learning_rate(model.spec.architecture))

    history = TrainHistory()
    n = X_tr.shape[0]
    for epoch in range(config.epochs):
        started = time.perf_counter()
        if config.shuffle_each_epoch:
            order = root.spawn(f"epoch-{epoch}").permutation(n)
        else:
            order = np.arange(n)
        epoch_loss = 0.0
        epoch_correct = 0
        for start in range(0, n, config.batch_size):
            rows = order[start:start + config.batch_size]
            xb, yb = X_tr[rows], y_tr[rows]
            optimizer.zero_grad()
            probs = model.forward(xb, training=True)
            loss, grad_logits = _batch_loss_and_grad(model, probs, yb)
            if not np.isfinite(loss):
                raise NonFiniteLossError(
                    f"loss became non-finite in epoch {epoch + 1}; "
                    f"last good epoch: {epoch}"
                )
            model.backward_from_logits(grad_logits)
            optimizer.step()
            epoch_loss += loss * xb.shape[0]
            if model.spec.mode is ClassificationMode.BINARY:
                pred = (probs[:, 0] >= 0.5).astype(np.int64)
            else:
                pred = probs.argmax(axis=1)
            epoch_correct += int((pred == yb).sum())
        val_loss, val_acc = _batched_eval(model, X_val, y_val)
        history.epochs.append(
            EpochRecord(
                epoch=epoch + 1,
                train_loss=epoch_loss / n,
                train_acc=epoch_correct / n,
                val_loss=val_loss,
                val_acc=val_acc,
                seconds=time.perf_counter() - started,
            )
        )
    return history


@dataclass
class MetricsReport:
    confusion: np.ndarray  # [C, C], rows = true class, cols = predicted
    class_names: list
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    undefined_precision: list  # classes never predicted (P forced to 0)
    undefined_recall: list  # classes absent from the test set (R forced to 0)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "classes": list(self.class_names),
            "per_class": {
                name: {
                    "precision": float(self.precision[i]),
                    "recall": float(self.recall[i]),
                    "f1": float(self.f1[i]),
                    "support": int(self.support[i]),
                }
                for i, name in enumerate(self.class_names)
            },
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
            "undefined_precision_classes": list(self.undefined_precision),
            "undefined_recall_classes": list(self.undefined_recall),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        width = max([len(str(n)) for n in self.class_names] + [8])
        lines = [
            f"accuracy: {self.accuracy:.4f}   samples: {int(self.support.sum())}",
            f"{'class'.ljust(width)}  precision  recall  f1      support",
        ]
        for i, name in enumerate(self.class_names):
            lines.append(
                f"{str(name).ljust(width)}  {self.precision[i]:.4f}     "
                f"{self.recall[i]:.4f}  {self.f1[i]:.4f}  {int(self.support[i])}"
            )
        lines.append(
            f"{'macro'.ljust(width)}  {self.macro_precision:.4f}     "
            f"{self.macro_recall:.4f}  {self.macro_f1:.4f}  {int(self.support.sum())}"
        )
        lines.append(
            f"{'weighted'.ljust(width)}  {self.weighted_precision:.4f}     "
            f"{self.weighted_recall:.4f}  {self.weighted_f1:.4f}  {int(self.support.sum())}"
        )
        return "\n".join(lines)


def metrics_from_confusion(confusion: np.ndarray, class_names) -> MetricsReport:
    """All derived metrics from a [C, C] confusion matrix (rows = truth).

    Undefined ratios (zero denominators) are reported as 0 and the class is
    flagged, never NaN.
    """
    confusion = np.asarray(confusion, dtype=np.int64)
    c = confusion.shape[0]
    if confusion.shape != (c, c):
        raise ValueError("confusion matrix must be square")
    total = confusion.sum()
    if total == 0:
        raise EmptyInputError("empty confusion matrix")
    tp = np.diag(confusion).astype(np.float64)
    predicted = confusion.sum(axis=0).astype(np.float64)
    actual = confusion.sum(axis=1).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted > 0, tp / np.where(predicted > 0, predicted, 1), 0.0)
        recall = np.where(actual > 0, tp / np.where(actual > 0, actual, 1), 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2.0 * precision * recall / np.where(pr > 0, pr, 1), 0.0)
    support = actual.astype(np.int64)
    weights = actual / total
    return MetricsReport(
        confusion=confusion,
        class_names=list(class_names),
        accuracy=float(tp.sum() / total),
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        weighted_precision=float((precision * weights).sum()),
        weighted_recall=float((recall * weights).sum()),
        weighted_f1=float((f1 * weights).sum()),
        undefined_precision=[class_names[i] for i in range(c) if predicted[i] == 0],
        undefined_recall=[class_names[i] for i in range(c) if actual[i] == 0],
    )


def evaluate(model: Model, X_test: np.ndarray, y_test: np.ndarray,
             class_names=None) -> MetricsReport:
    """Confusion matrix plus accuracy / P / R / F1 on held-out rows."""
    X_test = np.asarray(X_test, dtype=np.float32)
    y_test = np.asarray(y_test, dtype=np.int64)
    if X_test.shape[0] == 0:
        raise EmptyInputError("empty test set")
    _check_mode(model, y_test)
    n_classes = model.spec.mode.class_count
    if class_names is None:
        class_names = [str(i) for i in range(n_classes)]
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for start in range(0, X_test.shape[0], 4096):
        xb = X_test[start:start + 4096]
        yb = y_test[start:start + 4096]
        pred = model.predict(xb)
        np.add.at(confusion, (yb, pred), 1)
    return metrics_from_confusion(confusion, class_names)


def export_history(history: TrainHistory, path) -> None:
    """History CSV: epoch,train_loss,train_acc,val_loss,val_acc,seconds."""
    if not history.epochs:
        raise EmptyInputError("history has no epochs")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,train_loss,train_acc,val_loss,val_acc,seconds\n")
        for r in history.epochs:
            fh.write(
                f"{r.epoch},{r.train_loss:.6f},{r.train_acc:.6f},"
                f"{r.val_loss:.6f},{r.val_acc:.6f},{r.seconds:.6f}\n"
            )
