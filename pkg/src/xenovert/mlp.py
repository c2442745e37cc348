"""Small fully connected network trained with plain minibatch SGD.

Two heads: "classify" ends in a softmax trained on cross-entropy,
"regress" ends in a linear layer trained on mean squared error.  Hidden
layers are ReLU.  Everything is plain numpy; gradients are hand-derived
backprop, with a central-difference checker to verify them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TrainConfig",
    "MlpModel",
    "init_model",
    "forward",
    "predict",
    "loss",
    "gradients",
    "train",
    "gradient_check",
    "save_model",
    "load_model",
]

MODEL_VERSION = 1
_TASKS = ("classify", "regress")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 200
    epochs: int = 2000
    learning_rate: float = 0.01
    seed: int = 0
    # optional early stop: quit once the best epoch loss has not improved by
    # a relative plateau_rtol for plateau_patience consecutive epochs
    plateau_patience: int | None = None
    plateau_rtol: float = 1e-4

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ValueError("learning_rate must be a positive finite float")
        if self.plateau_patience is not None and self.plateau_patience < 1:
            raise ValueError("plateau_patience must be >= 1 when set")
        if self.plateau_rtol < 0:
            raise ValueError("plateau_rtol must be >= 0")


@dataclass
class MlpModel:
    task: str
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def num_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


def init_model(layer_sizes: list[int], task: str, seed: int = 0) -> MlpModel:
    """He-initialized weights, zero biases."""
    if task not in _TASKS:
        raise ValueError(f"task must be one of {_TASKS}, got {task!r}")
    if len(layer_sizes) < 2 or any(int(s) < 1 for s in layer_sizes):
        raise ValueError(f"layer_sizes needs >= 2 positive entries, got {layer_sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(task=task, weights=weights, biases=biases)


def _check_x(model: MlpModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.weights[0].shape[0]:
        raise ValueError(
            f"X must have shape (n, {model.weights[0].shape[0]}), got {X.shape}"
        )
    return X


def _forward_trace(model: MlpModel, X: np.ndarray):
    """Activations per layer plus the raw output, for backprop."""
    acts = [X]
    h = X
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = z if i == last else np.maximum(z, 0.0)
        acts.append(h)
    return acts


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def forward(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Class probabilities for "classify", raw outputs for "regress"."""
    X = _check_x(model, X)
    z = _forward_trace(model, X)[-1]
    if model.task == "classify":
        return np.exp(_log_softmax(z))
    return z


def predict(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Label indices for "classify", flat predictions for "regress"."""
    out = forward(model, X)
    if model.task == "classify":
        return out.argmax(axis=1)
    return out[:, 0] if out.shape[1] == 1 else out


def _check_y(model: MlpModel, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    n_out = model.weights[-1].shape[1]
    if model.task == "classify":
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError(f"y must have shape ({X.shape[0]},), got {y.shape}")
        if y.min() < 0 or y.max() >= n_out:
            raise ValueError(f"labels must lie in [0, {n_out}), got [{y.min()}, {y.max()}]")
        return y.astype(np.int64)
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape != (X.shape[0], n_out):
        raise ValueError(f"y must have shape ({X.shape[0]}, {n_out}), got {y.shape}")
    return y


def loss(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy ("classify") or mean squared error ("regress")."""
    X = _check_x(model, X)
    y = _check_y(model, X, y)
    z = _forward_trace(model, X)[-1]
    if model.task == "classify":
        logp = _log_softmax(z)
        return float(-logp[np.arange(X.shape[0]), y].mean())
    return float(((z - y) ** 2).mean())


def gradients(model: MlpModel, X: np.ndarray, y: np.ndarray):
    """Backprop gradients of :func:`loss` w.r.t. every weight and bias."""
    X = _check_x(model, X)
    y = _check_y(model, X, y)
    acts = _forward_trace(model, X)
    n = X.shape[0]
    z = acts[-1]
    if model.task == "classify":
        probs = np.exp(_log_softmax(z))
        probs[np.arange(n), y] -= 1.0
        delta = probs / n
    else:
        # mse over all n * n_out entries
        delta = 2.0 * (z - y) / y.size
    grad_w = [np.empty(0)] * len(model.weights)
    grad_b = [np.empty(0)] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0)
    return grad_w, grad_b


def train(model: MlpModel, X: np.ndarray, y: np.ndarray, config: TrainConfig) -> list[float]:
    """Shuffled minibatch SGD in place; returns the per-epoch mean batch loss.

    Raises FloatingPointError as soon as a batch loss stops being finite.
    """
    X = _check_x(model, X)
    y = _check_y(model, X, y)
    rng = np.random.default_rng(config.seed)
    n = X.shape[0]
    lr = config.learning_rate
    curve: list[float] = []
    best = math.inf
    stale = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = X[idx], y[idx]
            batch_loss = loss(model, xb, yb)
            if not math.isfinite(batch_loss):
                raise FloatingPointError(
                    f"non-finite loss {batch_loss} at epoch {epoch}; lower the learning rate"
                )
            epoch_loss += batch_loss * len(idx)
            grad_w, grad_b = gradients(model, xb, yb)
            for w, b, gw, gb in zip(model.weights, model.biases, grad_w, grad_b):
                w -= lr * gw
                b -= lr * gb
        curve.append(epoch_loss / n)
        if config.plateau_patience is not None:
            if curve[-1] < best * (1.0 - config.plateau_rtol):
                best, stale = curve[-1], 0
            else:
                stale += 1
                if stale >= config.plateau_patience:
                    break
    return curve


def gradient_check(model: MlpModel, X: np.ndarray, y: np.ndarray, eps: float = 1e-5):
    """Max relative error between backprop and central differences.

    Checks every coordinate, so keep the model small.  Returns
    (max_rel_error, worst_coordinate) where the coordinate is a
    ("W"|"b", layer, flat_index) triple.
    """
    grad_w, grad_b = gradients(model, X, y)
    worst = (0.0, ("W", 0, 0))
    for kind, arrays, grads in (("W", model.weights, grad_w), ("b", model.biases, grad_b)):
        for layer, (arr, grad) in enumerate(zip(arrays, grads)):
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + eps
                up = loss(model, X, y)
                flat[j] = orig - eps
                down = loss(model, X, y)
                flat[j] = orig
                numeric = (up - down) / (2 * eps)
                denom = max(abs(numeric), abs(gflat[j]), 1e-12)
                rel = abs(numeric - gflat[j]) / denom
                if rel > worst[0]:
                    worst = (rel, (kind, layer, j))
    return worst


def save_model(model: MlpModel) -> str:
    """Versioned JSON text holding the task and all parameters."""
    payload = {
        "version": MODEL_VERSION,
        "task": model.task,
        "layer_sizes": model.layer_sizes,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    return json.dumps(payload)


def load_model(text: str) -> MlpModel:
    """Inverse of :func:`save_model`; raises ValueError on malformed input."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"model payload is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValueError("model payload must be a JSON object")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {payload.get('version')!r}")
    task = payload.get("task")
    if task not in _TASKS:
        raise ValueError(f"task must be one of {_TASKS}, got {task!r}")
    sizes = payload.get("layer_sizes")
    weights = payload.get("weights")
    biases = payload.get("biases")
    if not isinstance(sizes, list) or not isinstance(weights, list) or not isinstance(biases, list):
        raise ValueError("model payload needs layer_sizes, weights, and biases lists")
    if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
        raise ValueError("weights and biases must each have len(layer_sizes) - 1 entries")
    ws, bs = [], []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        w = np.asarray(weights[i], dtype=np.float64)
        b = np.asarray(biases[i], dtype=np.float64)
        if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
            raise ValueError(f"layer {i} parameter shapes do not match layer_sizes")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError(f"layer {i} parameters must be finite")
        ws.append(w)
        bs.append(b)
    return MlpModel(task=task, weights=ws, biases=bs)
