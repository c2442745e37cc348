"""Synthetic input streams: parametric distributions and shift schedules.

A :class:`ShiftSchedule` describes a stream of ``horizon`` draws that moves
from a source distribution to a target distribution either instantly, by
gradual interpolation, or cyclically.  :func:`run_univariate` feeds such a
stream through one adaptive quantile tree and records the windowed
histogram-intersection score over time.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field

import numpy as np

from .metrics import hi_score, interval_histogram
from .qtree import Xenovert, XenovertConfig, grow

__all__ = [
    "Uniform",
    "Normal",
    "MultimodalNormal",
    "ChiSquared",
    "DistSpec",
    "ShiftSchedule",
    "UnivariateResult",
    "sample",
    "draw_at",
    "draw_stream",
    "run_univariate",
    "parse_dist",
]


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.hi > self.lo):
            raise ValueError(f"uniform needs hi > lo, got [{self.lo}, {self.hi})")

    def sample_n(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=n)

    def describe(self) -> str:
        return f"uniform({self.lo},{self.hi})"


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError(f"normal needs sigma > 0, got {self.sigma}")

    def sample_n(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(self.mu, self.sigma, size=n)

    def describe(self) -> str:
        return f"normal({self.mu},{self.sigma})"


@dataclass(frozen=True)
class MultimodalNormal:
    """Mixture of normals; component weights are normalized at construction."""

    components: tuple[tuple[float, float, float], ...]  # (mu, sigma, weight)

    def __post_init__(self):
        comps = tuple((float(m), float(s), float(w)) for m, s, w in self.components)
        if len(comps) < 1:
            raise ValueError("multimodal_normal needs at least one component")
        if any(s <= 0 for _, s, _ in comps):
            raise ValueError("all component sigmas must be > 0")
        if any(w <= 0 for _, _, w in comps):
            raise ValueError("all component weights must be > 0")
        total = sum(w for _, _, w in comps)
        comps = tuple((m, s, w / total) for m, s, w in comps)
        object.__setattr__(self, "components", comps)

    def sample_n(self, n: int, rng: np.random.Generator) -> np.ndarray:
        mus = np.array([m for m, _, _ in self.components])
        sigmas = np.array([s for _, s, _ in self.components])
        weights = np.array([w for _, _, w in self.components])
        which = rng.choice(len(self.components), size=n, p=weights)
        return rng.normal(mus[which], sigmas[which])

    def describe(self) -> str:
        inner = ",".join(f"({m},{s},{w})" for m, s, w in self.components)
        return f"multimodal({inner})"


@dataclass(frozen=True)
class ChiSquared:
    k: int

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"chi_squared needs integer k >= 1, got {self.k!r}")

    def sample_n(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.chisquare(self.k, size=n)

    def describe(self) -> str:
        return f"chisq({self.k})"


DistSpec = Uniform | Normal | MultimodalNormal | ChiSquared


def sample(spec: DistSpec, rng: np.random.Generator) -> float:
    """One draw from ``spec``."""
    return float(spec.sample_n(1, rng)[0])


_DIST_RE = re.compile(r"^\s*([a-zA-Z_][a-zA-Z_0-9]*)\s*\((.*)\)\s*$", re.S)

_DIST_NAMES = "uniform(lo,hi) | normal(mu,sigma) | chisq(k) | multimodal((mu,sigma,w),...)"


def parse_dist(text: str) -> DistSpec:
    """Parse a distribution expression such as ``normal(2,4)`` or ``chisq(3)``."""
    m = _DIST_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse distribution {text!r}; expected one of {_DIST_NAMES}")
    name, argstr = m.group(1).lower(), m.group(2)
    try:
        args = ast.literal_eval(f"({argstr},)")
    except (ValueError, SyntaxError) as exc:
        raise ValueError(f"bad arguments in distribution {text!r}: {exc}") from exc
    if name == "uniform" and len(args) == 2:
        return Uniform(float(args[0]), float(args[1]))
    if name == "normal" and len(args) == 2:
        return Normal(float(args[0]), float(args[1]))
    if name in ("chisq", "chi_squared", "chi2") and len(args) == 1:
        return ChiSquared(int(args[0]))
    if name in ("multimodal", "multimodal_normal"):
        return MultimodalNormal(tuple(tuple(c) for c in args))
    raise ValueError(f"cannot parse distribution {text!r}; expected one of {_DIST_NAMES}")


@dataclass(frozen=True)
class ShiftSchedule:
    """Time-indexed rule mapping step t in [0, horizon) to a distribution.

    kind "instant": source before ``t_shift``, target from ``t_shift`` on.
    kind "gradual": source before ``t_start``, target from ``t_end`` on, and
    in between either a parameter interpolation (uniform->uniform,
    normal->normal) or a mixture whose target probability ramps linearly.
    kind "recurring": each period starts with a source phase and spends the
    trailing ``duty`` fraction on the target.
    """

    kind: str
    source: DistSpec
    target: DistSpec
    horizon: int
    t_shift: int | None = None
    t_start: int | None = None
    t_end: int | None = None
    period: int | None = None
    duty: float = 0.5

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.kind == "instant":
            if self.t_shift is None or not (0 < self.t_shift < self.horizon):
                raise ValueError(f"instant shift needs 0 < t_shift < horizon, got {self.t_shift}")
        elif self.kind == "gradual":
            if (
                self.t_start is None
                or self.t_end is None
                or not (0 <= self.t_start < self.t_end <= self.horizon)
            ):
                raise ValueError(
                    f"gradual shift needs 0 <= t_start < t_end <= horizon, "
                    f"got [{self.t_start}, {self.t_end})"
                )
        elif self.kind == "recurring":
            if self.period is None or self.period < 1:
                raise ValueError(f"recurring shift needs period >= 1, got {self.period}")
            if not (0.0 < self.duty < 1.0):
                raise ValueError(f"duty must lie in (0, 1), got {self.duty}")
        else:
            raise ValueError(f"unknown shift kind {self.kind!r}")

    @classmethod
    def instant(cls, source, target, horizon, t_shift):
        return cls("instant", source, target, horizon, t_shift=t_shift)

    @classmethod
    def gradual(cls, source, target, horizon, t_start, t_end):
        return cls("gradual", source, target, horizon, t_start=t_start, t_end=t_end)

    @classmethod
    def recurring(cls, source, target, horizon, period, duty=0.5):
        return cls("recurring", source, target, horizon, period=period, duty=duty)

    def describe(self) -> dict:
        d = {
            "kind": self.kind,
            "source": self.source.describe(),
            "target": self.target.describe(),
            "horizon": self.horizon,
        }
        if self.kind == "instant":
            d["t_shift"] = self.t_shift
        elif self.kind == "gradual":
            d["t_start"], d["t_end"] = self.t_start, self.t_end
        else:
            d["period"], d["duty"] = self.period, self.duty
        return d


def _gradual_weight(schedule: ShiftSchedule, t: int) -> float:
    """Target weight at step t: 0 before t_start, 1 from t_end on, linear between."""
    if t < schedule.t_start:
        return 0.0
    if t >= schedule.t_end:
        return 1.0
    return (t - schedule.t_start) / (schedule.t_end - schedule.t_start)


def _lerp_dist(source: DistSpec, target: DistSpec, w: float) -> DistSpec | None:
    """Parameter interpolation for location-scale pairs of the same kind."""
    if isinstance(source, Uniform) and isinstance(target, Uniform):
        return Uniform((1 - w) * source.lo + w * target.lo, (1 - w) * source.hi + w * target.hi)
    if isinstance(source, Normal) and isinstance(target, Normal):
        return Normal((1 - w) * source.mu + w * target.mu, (1 - w) * source.sigma + w * target.sigma)
    return None


def _in_target_phase(schedule: ShiftSchedule, t) -> np.ndarray:
    """Recurring schedule: boolean target-phase mask for step(s) t."""
    phase = np.asarray(t) % schedule.period
    return phase >= schedule.period * (1.0 - schedule.duty)


def draw_at(schedule: ShiftSchedule, t: int, rng: np.random.Generator) -> float:
    """One draw from the distribution in force at step ``t``."""
    if not (0 <= t < schedule.horizon):
        raise ValueError(f"t must lie in [0, {schedule.horizon}), got {t}")
    if schedule.kind == "instant":
        spec = schedule.source if t < schedule.t_shift else schedule.target
        return sample(spec, rng)
    if schedule.kind == "recurring":
        spec = schedule.target if _in_target_phase(schedule, t) else schedule.source
        return sample(spec, rng)
    w = _gradual_weight(schedule, t)
    mid = _lerp_dist(schedule.source, schedule.target, w)
    if mid is not None:
        return sample(mid, rng)
    spec = schedule.target if rng.random() < w else schedule.source
    return sample(spec, rng)


def draw_stream(schedule: ShiftSchedule, rng: np.random.Generator) -> np.ndarray:
    """The full ``horizon``-length input stream, drawn in vectorized blocks.

    Semantics per step match :func:`draw_at`; the two consume the generator
    differently, so use one or the other for a reproducible stream.
    """
    T = schedule.horizon
    if schedule.kind == "instant":
        k = schedule.t_shift
        return np.concatenate(
            [schedule.source.sample_n(k, rng), schedule.target.sample_n(T - k, rng)]
        )
    if schedule.kind == "recurring":
        mask = _in_target_phase(schedule, np.arange(T))
        out = np.empty(T)
        out[~mask] = schedule.source.sample_n(int((~mask).sum()), rng)
        out[mask] = schedule.target.sample_n(int(mask.sum()), rng)
        return out
    # gradual
    t0, t1 = schedule.t_start, schedule.t_end
    ws = (np.arange(t0, t1) - t0) / (t1 - t0)
    if isinstance(schedule.source, Uniform) and isinstance(schedule.target, Uniform):
        lo = (1 - ws) * schedule.source.lo + ws * schedule.target.lo
        hi = (1 - ws) * schedule.source.hi + ws * schedule.target.hi
        ramp = rng.uniform(lo, hi)
    elif isinstance(schedule.source, Normal) and isinstance(schedule.target, Normal):
        mu = (1 - ws) * schedule.source.mu + ws * schedule.target.mu
        sigma = (1 - ws) * schedule.source.sigma + ws * schedule.target.sigma
        ramp = rng.normal(mu, sigma)
    else:
        pick_target = rng.random(t1 - t0) < ws
        ramp = np.where(
            pick_target,
            schedule.target.sample_n(t1 - t0, rng),
            schedule.source.sample_n(t1 - t0, rng),
        )
    return np.concatenate(
        [schedule.source.sample_n(t0, rng), ramp, schedule.target.sample_n(T - t1, rng)]
    )


@dataclass(frozen=True)
class UnivariateResult:
    """One stream run: windowed HI trajectory plus the pooled tail score.

    ``record_t[i]`` is the 1-based step count at which ``record_hi[i]`` was
    measured over the trailing ``hi_window`` outputs.  ``plateau_hi`` pools
    the trailing ``plateau_frac`` of all outputs into one histogram, which
    strips the small-window sampling noise off the converged score.
    """

    schedule: ShiftSchedule
    config: XenovertConfig
    seed: int
    hi_window: int
    record_every: int
    plateau_frac: float
    record_t: np.ndarray
    record_hi: np.ndarray
    plateau_hi: float
    outputs: np.ndarray = field(repr=False)
    tree: Xenovert = field(repr=False)


def run_univariate(
    schedule: ShiftSchedule,
    config: XenovertConfig,
    hi_window: int = 1000,
    record_every: int = 500,
    seed: int = 0,
    plateau_frac: float = 0.1,
) -> UnivariateResult:
    """Stream a schedule through one tree, updating then converting each draw.

    Deterministic given ``seed``.  Records the windowed HI score every
    ``record_every`` steps.
    """
    if hi_window < 1:
        raise ValueError("hi_window must be >= 1")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if not (0.0 < plateau_frac <= 1.0):
        raise ValueError("plateau_frac must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    xs = draw_stream(schedule, rng)
    tree = grow(config)
    m = config.num_intervals
    T = schedule.horizon
    outputs = np.empty(T, dtype=np.int64)
    ts, his = [], []
    update = tree.update
    convert = tree.convert
    for t, x in enumerate(xs.tolist()):
        update(x)
        outputs[t] = convert(x)
        done = t + 1
        if done % record_every == 0:
            lo = done - hi_window if done > hi_window else 0
            ts.append(done)
            his.append(hi_score(interval_histogram(outputs[lo:done], m, hi_window)))
    tail = outputs[-max(1, int(round(T * plateau_frac))) :]
    plateau = hi_score(interval_histogram(tail, m, tail.size))
    return UnivariateResult(
        schedule=schedule,
        config=config,
        seed=seed,
        hi_window=hi_window,
        record_every=record_every,
        plateau_frac=plateau_frac,
        record_t=np.asarray(ts, dtype=np.int64),
        record_hi=np.asarray(his, dtype=np.float64),
        plateau_hi=plateau,
        outputs=outputs,
        tree=tree,
    )
