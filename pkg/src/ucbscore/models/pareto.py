"""Pareto arms with separable scores ``s(alpha, beta) = a(alpha) * b(beta)``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from ..specfun import _l_minus

# Built-in score codes, shared with the simulation kernel.
MEAN, TAIL_EXPONENT, MEDIAN, CUSTOM = 0, 1, 2, -1
_LN2 = math.log(2.0)


@njit(cache=True)
def _a(code, alpha):
    if code == 0:
        return alpha / (alpha - 1.0)
    if code == 1:
        return 1.0 / alpha
    return 2.0 ** (1.0 / alpha)


@njit(cache=True)
def _a_inv(code, y):
    if code == 0:
        return y / (y - 1.0)
    if code == 1:
        return 1.0 / y
    return 0.6931471805599453 / math.log(y)


@njit(cache=True)
def _b(code, beta):
    if code == 1:
        return 1.0
    return beta


@njit(cache=True)
def _pareto_update(count, min_sample, log_sum, x):
    """Returns (count, min, sum of ln(X_k / min)) after one more sample."""
    if count == 0:
        return 1, x, 0.0
    if x >= min_sample:
        return count + 1, min_sample, log_sum + math.log(x / min_sample)
    # Every stored ratio grows by ln(min/x) when the minimum drops.
    return count + 1, x, log_sum + count * math.log(min_sample / x)


@njit(cache=True)
def _pareto_index(count, min_sample, log_sum, n, code, floor_l):
    if log_sum <= 0.0:
        return math.inf
    alpha_hat = (count - 1) / log_sum
    w = alpha_hat * _l_minus(math.log(n) / (count - 2))
    if w <= floor_l:
        return math.inf
    return _b(code, min_sample) * _a(code, w)


@dataclass(frozen=True)
class ParetoParams:
    alpha: float
    beta: float
    floor_l: float = 0.0

    def __post_init__(self):
        if not (self.floor_l >= 0.0 and math.isfinite(self.floor_l)):
            raise ValueError(f"floor_l must be a finite non-negative number, got {self.floor_l}")
        if not (self.alpha > self.floor_l and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must exceed floor_l={self.floor_l}, got {self.alpha}")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class SeparableScore:
    """Score ``a(alpha) * b(beta)`` with ``a`` decreasing/invertible and ``b`` nondecreasing.

    ``a_range`` is the open interval of values ``a`` takes on ``alpha > floor_l``;
    ``a_inverse`` must be defined on it.
    """

    a: Callable[[float], float]
    a_inverse: Callable[[float], float]
    b: Callable[[float], float]
    tag: str
    floor_l: float
    a_range: tuple[float, float]
    code: int = CUSTOM

    def __call__(self, alpha: float, beta: float) -> float:
        return self.a(alpha) * self.b(beta)

    def invert(self, y: float) -> float:
        lo, hi = self.a_range
        if not lo < y < hi:
            raise ValueError(
                f"{self.tag} score: a_inverse undefined at {y!r}; a ranges over ({lo}, {hi})"
            )
        return self.a_inverse(y)


def custom_score(a, a_inverse, b, floor_l, a_range, tag="custom", check_points=64) -> SeparableScore:
    """Register a user score, validating the ``a``/``a_inverse`` round trip."""
    lo, hi = a_range
    upper = hi if math.isfinite(hi) else lo + 1e3 * max(1.0, abs(lo))
    for y in np.linspace(lo, upper, check_points + 2)[1:-1]:
        alpha = a_inverse(y)
        if not alpha > floor_l:
            raise ValueError(f"a_inverse({y}) = {alpha} is not above floor_l={floor_l}")
        if abs(a(alpha) - y) > 1e-10 * max(1.0, abs(y)):
            raise ValueError(f"a(a_inverse({y})) = {a(alpha)} does not round-trip")
    return SeparableScore(a, a_inverse, b, tag, floor_l, (lo, hi))


MEAN_SCORE = SeparableScore(
    a=lambda al: _a(MEAN, al),
    a_inverse=lambda y: _a_inv(MEAN, y),
    b=lambda be: _b(MEAN, be),
    tag="mean",
    floor_l=1.0,
    a_range=(1.0, math.inf),
    code=MEAN,
)
TAIL_SCORE = SeparableScore(
    a=lambda al: _a(TAIL_EXPONENT, al),
    a_inverse=lambda y: _a_inv(TAIL_EXPONENT, y),
    b=lambda be: _b(TAIL_EXPONENT, be),
    tag="tail_exponent",
    floor_l=0.0,
    a_range=(0.0, math.inf),
    code=TAIL_EXPONENT,
)
MEDIAN_SCORE = SeparableScore(
    a=lambda al: _a(MEDIAN, al),
    a_inverse=lambda y: _a_inv(MEDIAN, y),
    b=lambda be: _b(MEDIAN, be),
    tag="median",
    floor_l=0.0,
    a_range=(1.0, math.inf),
    code=MEDIAN,
)
SCORES = {s.tag: s for s in (MEAN_SCORE, TAIL_SCORE, MEDIAN_SCORE)}


@dataclass(frozen=True)
class ParetoStats:
    count: int = 0
    min_sample: float = math.inf
    log_sum: float = 0.0

    @classmethod
    def from_samples(cls, xs) -> "ParetoStats":
        stats = cls()
        for x in xs:
            stats = pareto_update(stats, x)
        return stats


def pareto_update(stats: ParetoStats, x: float) -> ParetoStats:
    x = float(x)
    if not (x > 0.0 and math.isfinite(x)):
        raise ValueError(f"Pareto observations must be positive and finite, got {x!r}")
    return ParetoStats(*_pareto_update(stats.count, stats.min_sample, stats.log_sum, x))


def pareto_quantile(params: ParetoParams, u):
    """Inverse CDF, ``beta * (1 - u) ** (-1 / alpha)``; ``u`` may be an array."""
    arr = np.asarray(u, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("u must lie strictly inside (0, 1)")
    out = params.beta * (1.0 - arr) ** (-1.0 / params.alpha)
    return float(out) if out.ndim == 0 else out


class DegenerateSampleError(ValueError):
    """The sample carries no spread information (e.g. all observations equal)."""


def pareto_estimate(stats: ParetoStats) -> ParetoParams:
    """Maximum-likelihood style estimate: minimum sample and ``(t - 1) / log_sum``.

    The estimate lives in the unrestricted family (``floor_l = 0``).
    """
    if stats.count < 2:
        raise ValueError("need at least two samples")
    if stats.log_sum <= 0.0:
        raise DegenerateSampleError("all samples equal: shape estimate is unbounded")
    return ParetoParams((stats.count - 1) / stats.log_sum, stats.min_sample)


def pareto_kl(f: ParetoParams, g: ParetoParams) -> float:
    if g.beta > f.beta:
        return math.inf
    r = g.alpha / f.alpha
    return r - math.log(r) - 1.0 + g.alpha * math.log(f.beta / g.beta)


def pareto_score(f: ParetoParams, score: SeparableScore) -> float:
    return score(f.alpha, f.beta)


def pareto_M(f: ParetoParams, rho: float, score: SeparableScore) -> float:
    if not math.isfinite(rho):
        raise ValueError(f"rho must be finite, got {rho!r}")
    if rho <= score(f.alpha, f.beta):
        return 0.0
    x = score.invert(rho / score.b(f.beta)) / f.alpha
    return x - math.log(x) - 1.0


def pareto_index(stats: ParetoStats, n: int, score: SeparableScore, floor_l: float) -> float:
    """Upper confidence index with ``d_tilde = 2``; ``inf`` when the shape bound crosses the floor."""
    if stats.count < 3:
        raise ValueError("index requires at least 3 samples")
    if n < 1:
        raise ValueError("n must be >= 1")
    if score.code != CUSTOM:
        return _pareto_index(stats.count, stats.min_sample, stats.log_sum, float(n), score.code, floor_l)
    est = pareto_estimate(stats)
    w = est.alpha * _l_minus(math.log(n) / (stats.count - 2))
    if w <= floor_l:
        return math.inf
    return score.b(est.beta) * score.a(w)


@dataclass(frozen=True)
class ParetoArm:
    params: ParetoParams
    score_fn: SeparableScore
    family: str = "pareto"

    def score(self) -> float:
        return pareto_score(self.params, self.score_fn)

    def sample(self, u):
        return pareto_quantile(self.params, u)

    def M(self, rho: float) -> float:
        return pareto_M(self.params, rho, self.score_fn)


class ParetoPolicy:
    """UCB-PARETO: three forced pulls per arm, ``d_tilde = 2``."""

    name = "ucb-pareto"
    n0 = 3

    def __init__(self, score: SeparableScore, floor_l: float | None = None):
        self.score = score
        self.floor_l = score.floor_l if floor_l is None else floor_l

    def d_tilde(self, t):
        return 2

    def new_stats(self):
        return ParetoStats()

    def update(self, stats, x):
        return pareto_update(stats, x)

    def index(self, arm, stats, n):
        try:
            return pareto_index(stats, n, self.score, self.floor_l)
        except DegenerateSampleError:
            return math.inf
