"""Uniform arms on a single interval ``[a, b]`` with a score increasing in both endpoints."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

MEAN, CUSTOM = 0, -1
_SPAN_CAP = 2.0**60
_TOL = 1e-12


@njit(cache=True)
def _interval_update(count, lo, hi, x):
    if count == 0:
        return 1, x, x
    return count + 1, min(lo, x), max(hi, x)


@njit(cache=True)
def _interval_index_mean(count, lo, hi, n):
    right = lo + math.exp(math.log(n) / (count - 2)) * (hi - lo)
    return 0.5 * (lo + right)


@dataclass(frozen=True)
class IntervalParams:
    low: float
    high: float

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise ValueError("interval endpoints must be finite")
        if not self.low < self.high:
            raise ValueError(f"need low < high, got [{self.low}, {self.high}]")


@dataclass(frozen=True)
class MonotoneScore2D:
    evaluate: Callable[[float, float], float]
    tag: str = "custom"
    code: int = CUSTOM

    def __call__(self, a: float, b: float) -> float:
        return self.evaluate(a, b)


def monotone_score(evaluate, tag="custom", box=(-1.0, 2.0), grid=32, h=1e-3) -> MonotoneScore2D:
    """Register a custom score after spot-checking monotonicity on a ``grid x grid`` box."""
    pts = np.linspace(box[0], box[1], grid)
    for a in pts:
        for b in pts:
            if b <= a:
                continue
            base = evaluate(a, b)
            if not evaluate(a, b + h) > base:
                raise ValueError(f"score {tag!r} is not increasing in b at ({a:.4g}, {b:.4g})")
            if a + h < b and not evaluate(a + h, b) > base:
                raise ValueError(f"score {tag!r} is not increasing in a at ({a:.4g}, {b:.4g})")
    return MonotoneScore2D(evaluate, tag)


MEAN_SCORE = MonotoneScore2D(lambda a, b: 0.5 * (a + b), tag="mean", code=MEAN)
SCORES = {"mean": MEAN_SCORE}


@dataclass(frozen=True)
class IntervalStats:
    count: int = 0
    sample_min: float = math.inf
    sample_max: float = -math.inf

    @classmethod
    def from_samples(cls, xs) -> "IntervalStats":
        stats = cls()
        for x in xs:
            stats = interval_update(stats, x)
        return stats


def interval_update(stats: IntervalStats, x: float) -> IntervalStats:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"observation must be finite, got {x!r}")
    return IntervalStats(*_interval_update(stats.count, stats.sample_min, stats.sample_max, x))


def interval_quantile(params: IntervalParams, u):
    arr = np.asarray(u, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("u must lie strictly inside (0, 1)")
    out = params.low + arr * (params.high - params.low)
    return float(out) if out.ndim == 0 else out


class DegenerateIntervalError(ValueError):
    """All observations coincide, so the estimated interval has zero width."""


def interval_estimate(stats: IntervalStats) -> IntervalParams:
    if stats.count < 2:
        raise ValueError("need at least two samples")
    if stats.sample_min == stats.sample_max:
        raise DegenerateIntervalError("all samples equal: zero-width interval")
    return IntervalParams(stats.sample_min, stats.sample_max)


def interval_kl(f: IntervalParams, g: IntervalParams) -> float:
    if g.low <= f.low and f.high <= g.high:
        return math.log((g.high - g.low) / (f.high - f.low))
    return math.inf


class UnattainableScoreError(ValueError):
    """No right endpoint within the search cap reaches the requested score."""


def smallest_right_endpoint(f: IntervalParams, rho: float, score) -> float:
    """Smallest ``b' >= f.high`` with ``score(f.low, b') >= rho``.

    Doubling bracket on the span followed by bisection until the bracket is
    below ``1e-12`` relative; the upper (feasible) end is returned.
    """
    a, b = f.low, f.high
    if score(a, b) >= rho:
        return b
    span = b - a
    lo, hi = b, a + 2.0 * span
    while score(a, hi) < rho:
        lo = hi
        span *= 2.0
        if span > _SPAN_CAP * (b - a):
            raise UnattainableScoreError(
                f"score {rho!r} not reached for right endpoints up to {a + span:.3g}"
            )
        hi = a + 2.0 * span
    while hi - lo > _TOL * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if score(a, mid) >= rho:
            hi = mid
        else:
            lo = mid
    return hi


def interval_M(f: IntervalParams, rho: float, score: MonotoneScore2D) -> float:
    if not math.isfinite(rho):
        raise ValueError(f"rho must be finite, got {rho!r}")
    if rho <= score(f.low, f.high):
        return 0.0
    if score.code == MEAN:
        # Closed form of the search below for the midpoint score.
        right = 2.0 * rho - f.low
    else:
        right = smallest_right_endpoint(f, rho, score)
    return math.log(right - f.low) - math.log(f.high - f.low)


def interval_index(stats: IntervalStats, n: int, score: MonotoneScore2D) -> float:
    """Score at the inflated right endpoint ``a + n^(1/(t-2)) (b - a)``."""
    if stats.count < 3:
        raise ValueError("index requires at least 3 samples")
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = stats.sample_min, stats.sample_max
    if score.code == MEAN:
        return _interval_index_mean(stats.count, lo, hi, float(n))
    right = lo + math.exp(math.log(n) / (stats.count - 2)) * (hi - lo)
    return score(lo, right)


@dataclass(frozen=True)
class IntervalArm:
    params: IntervalParams
    score_fn: MonotoneScore2D = MEAN_SCORE
    family: str = "interval"

    def score(self) -> float:
        return self.score_fn(self.params.low, self.params.high)

    def sample(self, u):
        return interval_quantile(self.params, u)

    def M(self, rho: float) -> float:
        return interval_M(self.params, rho, self.score_fn)


class IntervalPolicy:
    """UCB-UNIFORM: three forced pulls per arm, ``d_tilde = 2``."""

    name = "ucb-uniform"
    n0 = 3

    def __init__(self, score: MonotoneScore2D = MEAN_SCORE):
        self.score = score

    def d_tilde(self, t):
        return 2

    def new_stats(self):
        return IntervalStats()

    def update(self, stats, x):
        return interval_update(stats, x)

    def index(self, arm, stats, n):
        return interval_index(stats, n, self.score)
