"""Per-stream classifiers: linear softmax or one-hidden-layer MLP, trained
with mini-batch SGD plus classical momentum, fit/predict style.

The velocity update is v = momentum * v - lr * grad; w += v. Dropout (when
enabled) zeroes hidden units at train time with inverted scaling, so
inference uses the weights as-is. All randomness (init, epoch shuffling,
dropout masks) derives from the seed, making training bit-reproducible.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

from .base import ParamsMixin
from .validation import check_array, check_features_labels

_LOG = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"TSNC"
CHECKPOINT_VERSION = 1


class NumericalError(RuntimeError):
    """Training hit a non-finite loss."""


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class StreamClassifier(ParamsMixin):
    """Softmax classifier over snippet features, optionally with one
    ReLU hidden layer and dropout.

    Parameters
    ----------
    num_classes : int
    hidden_units : int or None
        None gives a plain linear softmax model.
    dropout : float in [0, 1)
        Fraction of hidden units dropped per training batch.
    learning_rate, lr_decay, batch_size, momentum, epochs, seed :
        SGD settings. The learning rate is multiplied by lr_decay once,
        at two thirds of the epoch budget.

    Attributes (after fit)
    ----------------------
    weights_ : dict of parameter arrays
    loss_history_ : list of per-epoch mean cross-entropy losses
    """

    def __init__(self, num_classes: int, hidden_units: int | None = None,
                 dropout: float = 0.0, learning_rate: float = 0.05,
                 lr_decay: float = 0.1, batch_size: int = 128,
                 momentum: float = 0.9, epochs: int = 30, seed: int = 0):
        self.num_classes = num_classes
        self.hidden_units = hidden_units
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.lr_decay = lr_decay
        self.batch_size = batch_size
        self.momentum = momentum
        self.epochs = epochs
        self.seed = seed

    def _validate_params(self):
        if self.num_classes < 2:
            raise ValueError("need at least 2 classes")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must lie in [0, 1)")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.hidden_units is not None and self.hidden_units < 1:
            raise ValueError("hidden_units must be positive when set")

    # -- parameters ------------------------------------------------------

    def init_weights(self, num_features: int, rng: np.random.Generator | None = None
                     ) -> dict[str, np.ndarray]:
        """He-scaled random weights (or zeros with rng=None for testing)."""
        self._validate_params()
        shapes = self._shapes(num_features)
        weights = {}
        for name, shape in shapes.items():
            if rng is None or name.startswith("b"):
                weights[name] = np.zeros(shape)
            else:
                fan_in = shape[0]
                weights[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)
        self.weights_ = weights
        self.num_features_ = num_features
        return weights

    def _shapes(self, f: int) -> dict[str, tuple]:
        if self.hidden_units is None:
            return {"W": (f, self.num_classes), "b": (self.num_classes,)}
        h = self.hidden_units
        return {"W1": (f, h), "b1": (h,),
                "W2": (h, self.num_classes), "b2": (self.num_classes,)}

    # -- forward / backward ----------------------------------------------

    def _logits(self, X: np.ndarray, weights: dict, dropout_mask=None) -> np.ndarray:
        if self.hidden_units is None:
            return X @ weights["W"] + weights["b"]
        hidden = np.maximum(0.0, X @ weights["W1"] + weights["b1"])
        if dropout_mask is not None:
            hidden = hidden * dropout_mask
        return hidden @ weights["W2"] + weights["b2"]

    def loss_and_gradients(self, X: np.ndarray, y: np.ndarray,
                           weights: dict | None = None, dropout_mask=None
                           ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean cross-entropy and its exact gradients.

        A fixed dropout_mask (broadcastable to the hidden layer) makes the
        loss deterministic, which is what finite-difference checks need.
        """
        weights = self.weights_ if weights is None else weights
        n = X.shape[0]
        if self.hidden_units is None:
            logits = X @ weights["W"] + weights["b"]
            probs = softmax(logits)
            loss = float(-np.mean(np.log(probs[np.arange(n), y] + 1e-300)))
            delta = probs
            delta[np.arange(n), y] -= 1.0
            delta /= n
            return loss, {"W": X.T @ delta, "b": delta.sum(axis=0)}
        pre = X @ weights["W1"] + weights["b1"]
        hidden = np.maximum(0.0, pre)
        if dropout_mask is not None:
            hidden = hidden * dropout_mask
        logits = hidden @ weights["W2"] + weights["b2"]
        probs = softmax(logits)
        loss = float(-np.mean(np.log(probs[np.arange(n), y] + 1e-300)))
        delta = probs
        delta[np.arange(n), y] -= 1.0
        delta /= n
        d_hidden = delta @ weights["W2"].T
        if dropout_mask is not None:
            d_hidden = d_hidden * dropout_mask
        d_pre = d_hidden * (pre > 0)
        return loss, {
            "W1": X.T @ d_pre, "b1": d_pre.sum(axis=0),
            "W2": hidden.T @ delta, "b2": delta.sum(axis=0),
        }

    # -- training ----------------------------------------------------------

    def fit(self, X, y) -> "StreamClassifier":
        self._validate_params()
        X, y = check_features_labels(X, y, self.num_classes)
        n, f = X.shape
        rng = np.random.default_rng(self.seed)
        self.init_weights(f, rng)
        velocity = {k: np.zeros_like(w) for k, w in self.weights_.items()}
        batch = min(self.batch_size, n)
        if batch < self.batch_size:
            _LOG.info("batch size capped at %d (only %d training samples)",
                      batch, n)
        self.batch_size_used_ = batch
        decay_epoch = (2 * self.epochs) // 3
        history: list[float] = []
        for epoch in range(self.epochs):
            lr = self.learning_rate * (self.lr_decay if epoch >= decay_epoch else 1.0)
            order = rng.permutation(n)
            losses = []
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                mask = None
                if self.hidden_units is not None and self.dropout > 0.0:
                    keep = 1.0 - self.dropout
                    mask = (rng.random(self.hidden_units) < keep) / keep
                loss, grads = self.loss_and_gradients(X[idx], y[idx],
                                                      dropout_mask=mask)
                if not np.isfinite(loss):
                    raise NumericalError(
                        f"non-finite loss at epoch {epoch}, batch {start // batch}: "
                        f"{loss!r} (lr={lr}, batch={batch})")
                for k in self.weights_:
                    velocity[k] = self.momentum * velocity[k] - lr * grads[k]
                    self.weights_[k] = self.weights_[k] + velocity[k]
                losses.append(loss)
            history.append(float(np.mean(losses)))
        self.loss_history_ = history
        return self

    # -- inference ---------------------------------------------------------

    def predict_proba(self, X) -> np.ndarray:
        if not hasattr(self, "weights_"):
            raise RuntimeError("classifier is not fitted")
        X = check_array(X, name="X", ndim=2)
        return softmax(self._logits(X, self.weights_))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def score(self, X, y) -> float:
        y = np.asarray(y)
        return float(np.mean(self.predict(X) == y))


def numerical_gradients(clf: StreamClassifier, X, y, weights: dict,
                        dropout_mask=None, h: float = 1e-6) -> dict[str, np.ndarray]:
    """Central finite differences of the loss, parameter by parameter."""
    grads = {}
    for name, w in weights.items():
        g = np.zeros_like(w)
        flat = w.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp, _ = clf.loss_and_gradients(X, y, weights, dropout_mask)
            flat[i] = orig - h
            lm, _ = clf.loss_and_gradients(X, y, weights, dropout_mask)
            flat[i] = orig
            gflat[i] = (lp - lm) / (2 * h)
        grads[name] = g
    return grads


# -- checkpoints -----------------------------------------------------------

_KIND_CODES = {"linear": 0, "mlp": 1}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def save_checkpoint(path, streams: list[tuple[str, StreamClassifier, float]]) -> None:
    """Write named streams and their fusion weights to one binary file.

    Layout: magic 'TSNC', version byte, stream count byte, then per stream
    a name, kind, dimension header, dropout and fusion weight, followed by
    the little-endian float64 weight payload.
    """
    if not streams:
        raise ValueError("checkpoint needs at least one stream")
    blob = bytearray()
    blob += CHECKPOINT_MAGIC
    blob += struct.pack("<BB", CHECKPOINT_VERSION, len(streams))
    for name, clf, fusion_weight in streams:
        if not hasattr(clf, "weights_"):
            raise ValueError(f"stream {name!r} is not fitted")
        encoded = name.encode("utf-8")
        kind = 0 if clf.hidden_units is None else 1
        blob += struct.pack("<H", len(encoded)) + encoded
        blob += struct.pack("<BIII", kind, clf.num_classes, clf.num_features_,
                            clf.hidden_units or 0)
        blob += struct.pack("<dd", clf.dropout, fusion_weight)
        for key in sorted(clf.weights_):
            arr = np.ascontiguousarray(clf.weights_[key], dtype="<f8")
            blob += arr.tobytes()
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path) -> list[tuple[str, StreamClassifier, float]]:
    data = Path(path).read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic {data[:4]!r})")
    version, count = struct.unpack_from("<BB", data, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    pos = 6
    streams = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + name_len].decode("utf-8")
        pos += name_len
        kind, num_classes, num_features, hidden = struct.unpack_from("<BIII", data, pos)
        pos += struct.calcsize("<BIII")
        dropout, fusion_weight = struct.unpack_from("<dd", data, pos)
        pos += 16
        clf = StreamClassifier(num_classes=num_classes,
                               hidden_units=hidden if kind == 1 else None,
                               dropout=dropout)
        shapes = clf._shapes(num_features)
        weights = {}
        for key in sorted(shapes):  # payload is stored in sorted key order
            size = int(np.prod(shapes[key]))
            arr = np.frombuffer(data, dtype="<f8", count=size, offset=pos)
            pos += size * 8
            weights[key] = arr.reshape(shapes[key]).astype(np.float64)
        clf.weights_ = {k: weights[k] for k in shapes}
        clf.num_features_ = num_features
        streams.append((name, clf, fusion_weight))
    return streams
