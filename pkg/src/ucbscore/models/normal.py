"""Normal arms under three scores: the mean, the inverse variance, and a tail probability."""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

from ..specfun import _l_plus, _norm_sf, norm_quantile


@njit(cache=True)
def _normal_update(count, mean, m2, x):
    count += 1
    delta = x - mean
    mean += delta / count
    m2 += delta * (x - mean)
    return count, mean, max(m2, 0.0)


@njit(cache=True)
def _index_chk(count, mean, m2, n):
    sigma = math.sqrt(m2 / (count - 1))
    return mean + sigma * math.sqrt(math.expm1(2.0 * math.log(n) / (count - 2)))


@njit(cache=True)
def _index_var(count, m2, n):
    if m2 <= 0.0:
        return math.inf
    return (count - 1) / m2 * _l_plus(2.0 * math.log(n) / (count - 2))


@njit(cache=True)
def _index_threshold(count, mean, n, kappa, sigma):
    z = (kappa - mean) / sigma - math.sqrt(2.0 * math.log(n) / (count - 1))
    return _norm_sf(z)


@dataclass(frozen=True)
class NormalParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu!r}")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma!r}")


@dataclass(frozen=True)
class ThresholdSpec:
    kappa: float
    known_sigma: float

    def __post_init__(self):
        if not math.isfinite(self.kappa):
            raise ValueError("kappa must be finite")
        if not (self.known_sigma > 0.0 and math.isfinite(self.known_sigma)):
            raise ValueError(f"known_sigma must be positive, got {self.known_sigma!r}")


@dataclass(frozen=True)
class NormalStats:
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @property
    def variance(self) -> float:
        if self.count < 2:
            raise ValueError("sample variance needs at least two samples")
        return self.m2 / (self.count - 1)

    @classmethod
    def from_samples(cls, xs) -> "NormalStats":
        stats = cls()
        for x in xs:
            stats = normal_update(stats, x)
        return stats

    def merge(self, other: "NormalStats") -> "NormalStats":
        """Combine two disjoint sample blocks (parallel-variance formula)."""
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return NormalStats(count, mean, m2)


def normal_update(stats: NormalStats, x: float) -> NormalStats:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"observation must be finite, got {x!r}")
    return NormalStats(*_normal_update(stats.count, stats.mean, stats.m2, x))


def normal_quantile(params: NormalParams, u):
    return params.mu + params.sigma * norm_quantile(u)


def normal_kl(f: NormalParams, g: NormalParams) -> float:
    r = (f.sigma / g.sigma) ** 2
    return (f.mu - g.mu) ** 2 / (2.0 * g.sigma**2) + 0.5 * (r - math.log(r) - 1.0)


def _finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"expected a finite value, got {v!r}")


def _check_index_args(stats, n, min_count):
    if stats.count < min_count:
        raise ValueError(f"index requires at least {min_count} samples, got {stats.count}")
    if n < 1:
        raise ValueError("n must be >= 1")


# Mean score, unknown mean and variance.

def m_chk(f: NormalParams, rho: float) -> float:
    _finite(rho)
    if rho <= f.mu:
        return 0.0
    return 0.5 * math.log1p(((rho - f.mu) / f.sigma) ** 2)


def index_chk(stats: NormalStats, n: int) -> float:
    _check_index_args(stats, n, 3)
    return _index_chk(stats.count, stats.mean, stats.m2, float(n))


# Inverse-variance score, common mean.

class DegenerateVarianceError(ValueError):
    """All observations equal, so the sample variance is zero."""


def m_var(f: NormalParams, rho: float) -> float:
    _finite(rho)
    if not rho > 0.0:
        raise ValueError(f"rho must be positive, got {rho!r}")
    x = rho * f.sigma**2
    if x <= 1.0:
        return 0.0
    return 0.5 * (x - math.log(x) - 1.0)


def index_var(stats: NormalStats, n: int) -> float:
    _check_index_args(stats, n, 3)
    if stats.m2 <= 0.0:
        raise DegenerateVarianceError("zero sample variance")
    return _index_var(stats.count, stats.m2, float(n))


# Tail probability above kappa, known per-arm sigma.

def threshold_score(mu: float, spec: ThresholdSpec) -> float:
    return _norm_sf((spec.kappa - mu) / spec.known_sigma)


def m_threshold(mu: float, spec: ThresholdSpec, rho: float) -> float:
    _finite(mu)
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho!r}")
    if rho <= threshold_score(mu, spec):
        return 0.0
    gap = (spec.kappa - mu) / spec.known_sigma - norm_quantile(1.0 - rho)
    return 0.5 * gap * gap


def index_threshold(stats: NormalStats, n: int, spec: ThresholdSpec) -> float:
    _check_index_args(stats, n, 2)
    return _index_threshold(stats.count, stats.mean, float(n), spec.kappa, spec.known_sigma)


@dataclass(frozen=True)
class NormalChkArm:
    params: NormalParams
    family: str = "normal_chk"

    def score(self) -> float:
        return self.params.mu

    def sample(self, u):
        return normal_quantile(self.params, u)

    def M(self, rho: float) -> float:
        return m_chk(self.params, rho)


@dataclass(frozen=True)
class NormalVarArm:
    params: NormalParams
    family: str = "normal_var"

    def score(self) -> float:
        return 1.0 / self.params.sigma**2

    def sample(self, u):
        return normal_quantile(self.params, u)

    def M(self, rho: float) -> float:
        return m_var(self.params, rho)


@dataclass(frozen=True)
class NormalThresholdArm:
    mu: float
    spec: ThresholdSpec
    family: str = "normal_thr"

    @property
    def params(self) -> NormalParams:
        return NormalParams(self.mu, self.spec.known_sigma)

    def score(self) -> float:
        return threshold_score(self.mu, self.spec)

    def sample(self, u):
        return normal_quantile(self.params, u)

    def M(self, rho: float) -> float:
        return m_threshold(self.mu, self.spec, rho)


class _NormalPolicy:
    n0 = 3

    def d_tilde(self, t):
        return 2

    def new_stats(self):
        return NormalStats()

    def update(self, stats, x):
        return normal_update(stats, x)


class ChkPolicy(_NormalPolicy):
    name = "ucb-normal"

    def index(self, arm, stats, n):
        return index_chk(stats, n)


class VariancePolicy(_NormalPolicy):
    """Zero sample variance yields an infinite index so the arm is re-sampled."""

    name = "ucb-normal-variance"

    def index(self, arm, stats, n):
        _check_index_args(stats, n, 3)
        return _index_var(stats.count, stats.m2, float(n))


class ThresholdPolicy(_NormalPolicy):
    name = "ucb-normal-threshold"
    n0 = 2

    def __init__(self, kappa: float, sigmas):
        self.specs = [ThresholdSpec(kappa, s) for s in sigmas]

    def d_tilde(self, t):
        return 1

    def index(self, arm, stats, n):
        return index_threshold(stats, n, self.specs[arm])

