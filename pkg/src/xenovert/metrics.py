"""Evaluation metrics: histogram intersection, quantile shift function, task scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "IntervalHistogram",
    "ShiftProfile",
    "hi_score",
    "interval_histogram",
    "shift_function",
    "accuracy",
    "mse",
    "DEFAULT_PROBS",
]

DEFAULT_PROBS = tuple(np.round(np.arange(0.1, 1.0, 0.1), 10))


@dataclass(frozen=True)
class IntervalHistogram:
    """Activation counts per interval index; ``len(counts)`` equals the interval count."""

    counts: np.ndarray
    total: int = field(init=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0:
            raise ValueError("counts must be a nonempty 1-d array")
        if (counts < 0).any():
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(counts.sum()))


@dataclass(frozen=True)
class ShiftProfile:
    """Per-quantile difference between two samples: delta = Q_target(p) - Q_source(p)."""

    probs: tuple[float, ...]
    deltas: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        deltas = tuple(float(d) for d in self.deltas)
        if len(probs) != len(deltas):
            raise ValueError("probs and deltas must have equal length")
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise ValueError("probs must lie within [0, 1]")
        if any(b <= a for a, b in zip(probs, probs[1:])):
            raise ValueError("probs must be strictly increasing")
        if not all(np.isfinite(deltas)):
            raise ValueError("deltas must be finite")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "deltas", deltas)


def hi_score(observed: IntervalHistogram) -> float:
    """Histogram intersection with the exact uniform reference.

    Returns sum_i min(observed_i / total, 1/M) in [0, 1]; exactly 1 iff the
    observed histogram is uniform.  Invariant under bin permutation.
    """
    if observed.total <= 0:
        raise ValueError("hi_score needs a histogram with at least one count")
    m = observed.counts.size
    freqs = observed.counts / observed.total
    return float(np.minimum(freqs, 1.0 / m).sum())


def interval_histogram(outputs, m: int, window: int) -> IntervalHistogram:
    """Count interval activations over the trailing ``window`` outputs.

    ``outputs`` is a sequence of interval indices in [0, m); shorter streams
    are counted whole.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if window < 1:
        raise ValueError("window must be >= 1")
    tail = np.asarray(outputs[-window:] if len(outputs) > window else outputs, dtype=np.int64)
    if tail.size and (tail.min() < 0 or tail.max() >= m):
        raise ValueError(f"interval indices must lie in [0, {m})")
    return IntervalHistogram(np.bincount(tail, minlength=m))


def shift_function(source, target, probs=DEFAULT_PROBS) -> ShiftProfile:
    """Quantile-wise difference between two samples.

    For each probability p, delta(p) is the linearly interpolated empirical
    p-quantile of ``target`` minus that of ``source``, in input units.  A pure
    translation of the target by c shifts every delta by exactly c.
    """
    src = np.asarray(source, dtype=np.float64).ravel()
    tgt = np.asarray(target, dtype=np.float64).ravel()
    if src.size == 0 or tgt.size == 0:
        raise ValueError("shift_function requires nonempty samples")
    ps = np.asarray(probs, dtype=np.float64)
    deltas = np.quantile(tgt, ps) - np.quantile(src, ps)
    return ShiftProfile(probs=tuple(ps), deltas=tuple(deltas))


def accuracy(pred_labels, true_labels) -> float:
    """Fraction of exact label matches."""
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape != true.shape or pred.size == 0:
        raise ValueError("accuracy requires equal-length nonempty label vectors")
    return float(np.mean(pred == true))


def mse(pred, truth) -> float:
    """Mean squared error."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape or p.size == 0:
        raise ValueError("mse requires equal-shape nonempty arrays")
    return float(np.mean((p - t) ** 2))
