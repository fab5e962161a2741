"""Segmental consensus, weighted late fusion, and evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import StreamClassifier, softmax


def predict_video(model: StreamClassifier, snippet_features: np.ndarray) -> np.ndarray:
    """Video-level scores: arithmetic mean of per-snippet softmax vectors.

    snippet_features has shape (K, F); the result sums to 1.
    """
    snippet_features = np.asarray(snippet_features, dtype=np.float64)
    if snippet_features.ndim != 2:
        raise ValueError("snippet_features must be (num_snippets, num_features)")
    probs = model.predict_proba(snippet_features)
    return probs.mean(axis=0)


def fuse_scores(stream_scores, weights) -> tuple[np.ndarray, int]:
    """Weighted mean of per-stream score vectors and the argmax class.

    Ties break toward the lowest class index. Raises on mismatched score
    lengths or an all-zero weight vector.
    """
    scores = [np.asarray(s, dtype=np.float64) for s in stream_scores]
    w = np.asarray(weights, dtype=np.float64)
    if len(scores) != w.shape[0]:
        raise ValueError(f"{len(scores)} score vectors but {w.shape[0]} weights")
    if np.any(w < 0):
        raise ValueError("fusion weights must be non-negative")
    total = w.sum()
    if total == 0:
        raise ValueError("at least one fusion weight must be positive")
    length = scores[0].shape[0]
    for s in scores[1:]:
        if s.shape != (length,):
            raise ValueError("stream score vectors differ in length")
    fused = np.zeros(length)
    for wi, si in zip(w, scores):
        fused += wi * si
    fused /= total
    return fused, int(np.argmax(fused))


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    per_class_accuracy: np.ndarray    # aligned with manifest class order
    confusion: np.ndarray             # rows true class, columns predicted
    num_videos: int

    def summary(self, class_names=None) -> str:
        lines = [f"top-1 accuracy: {self.accuracy:.4f} over {self.num_videos} videos"]
        if class_names is not None:
            for name, acc in zip(class_names, self.per_class_accuracy):
                lines.append(f"  {name:>16s}: {acc:.4f}")
        return "\n".join(lines)


def evaluate(y_true, y_pred, num_classes: int) -> EvalResult:
    """Top-1 accuracy, per-class accuracies, and the confusion matrix."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.size == 0:
        raise ValueError("empty test split")
    if y_true.shape != y_pred.shape:
        raise ValueError("prediction/label length mismatch")
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        confusion[t, p] += 1
    totals = confusion.sum(axis=1)
    per_class = np.divide(np.diag(confusion), totals,
                          out=np.zeros(num_classes), where=totals > 0)
    return EvalResult(
        accuracy=float(np.trace(confusion) / y_true.size),
        per_class_accuracy=per_class,
        confusion=confusion,
        num_videos=int(y_true.size),
    )
