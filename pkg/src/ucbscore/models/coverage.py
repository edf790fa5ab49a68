"""Uniform arms on finite unions of sub-intervals of [0, 1]; the score is the covered measure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

SQRT, LOG2 = 0, 1
SCHEDULES = {"sqrt": SQRT, "log2": LOG2}


@njit(cache=True)
def _cells(t, kind):
    """Partition size d(t): ceil(sqrt(t)) or max(1, ceil(log2(t + 1)))."""
    if kind == 0:
        d = int(math.sqrt(t))
        while d * d < t:
            d += 1
        while d > 1 and (d - 1) * (d - 1) >= t:
            d -= 1
        return max(d, 1)
    d = 0
    while (1 << d) < t + 1:
        d += 1
    return max(d, 1)


@njit(cache=True)
def _coverage_index(measure, n, t, d_tilde):
    value = measure * math.exp(math.log(n) / (t - d_tilde))
    return min(value, 1.0)


@dataclass(frozen=True)
class SupportSet:
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if not ivs:
            raise ValueError("support needs at least one interval")
        for a, b in ivs:
            if not (0.0 <= a < b <= 1.0):
                raise ValueError(f"interval [{a}, {b}] must satisfy 0 <= a < b <= 1")
        for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
            if not b0 < a1:
                raise ValueError(f"intervals [{a0}, {b0}] and [{a1}, {b1}] are unsorted or not disjoint")
        object.__setattr__(self, "intervals", ivs)
        if not 0.0 < self.measure < 1.0:
            raise ValueError("the full interval [0, 1] is excluded from the family")

    @property
    def measure(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def contains(self, other: "SupportSet") -> bool:
        """True when ``other`` is a subset of this support."""
        return all(any(a <= c and d <= b for a, b in self.intervals) for c, d in other.intervals)


@dataclass(frozen=True)
class PartitionSchedule:
    kind: str = "sqrt"

    def __post_init__(self):
        if self.kind not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.kind!r}; expected one of {sorted(SCHEDULES)}")

    @property
    def code(self) -> int:
        return SCHEDULES[self.kind]

    def d(self, t: int) -> int:
        return _cells(int(t), self.code)

    def d_tilde(self, t: int) -> int:
        return self.d(t) + 1

    @property
    def n0(self) -> int:
        n = 1
        while not n > self.d_tilde(n):
            n += 1
        return n


@dataclass(frozen=True)
class CoverageStats:
    samples: np.ndarray = field(default_factory=lambda: np.empty(0))
    # (t, d) -> (measure, mask); re-binning is O(t) so it is done once per partition.
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def count(self) -> int:
        return len(self.samples)


def coverage_update(stats: CoverageStats, x: float) -> CoverageStats:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"coverage observations must lie in [0, 1], got {x!r}")
    return CoverageStats(np.append(stats.samples, x))


def coverage_quantile(support: SupportSet, u):
    """Inverse CDF of the uniform law on ``support``; ``u`` may be an array."""
    arr = np.asarray(u, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("u must lie strictly inside (0, 1)")
    starts = np.array([a for a, _ in support.intervals])
    lengths = np.array([b - a for a, b in support.intervals])
    cum = np.cumsum(lengths)
    v = arr * cum[-1]
    k = np.minimum(np.searchsorted(cum, v, side="left"), len(cum) - 1)
    before = np.concatenate(([0.0], cum[:-1]))
    out = starts[k] + (v - before[k])
    return float(out) if out.ndim == 0 else out


def coverage_estimate(stats: CoverageStats, schedule: PartitionSchedule) -> tuple[float, np.ndarray]:
    """Occupied fraction of the d(t)-cell partition, and the occupancy mask."""
    t = stats.count
    if t < 1:
        raise ValueError("need at least one sample")
    d = schedule.d(t)
    key = (t, d)
    if key not in stats._memo:
        cells = np.minimum((stats.samples * d).astype(np.int64), d - 1)
        mask = np.zeros(d, dtype=bool)
        mask[cells] = True
        stats._memo[key] = (int(mask.sum()) / d, mask)
    measure, mask = stats._memo[key]
    return measure, mask.copy()


def coverage_kl(s_measure: float, t_measure: float, subset: bool) -> float:
    for m in (s_measure, t_measure):
        if not 0.0 < m < 1.0:
            raise ValueError(f"measures must lie in (0, 1), got {m!r}")
    if not subset:
        return math.inf
    return math.log(t_measure / s_measure)


def coverage_M(measure: float, rho: float) -> float:
    if not 0.0 < measure < 1.0:
        raise ValueError(f"measure must lie in (0, 1), got {measure!r}")
    if not rho <= 1.0:
        raise ValueError(f"rho above the score supremum 1: {rho!r}")
    if rho <= measure:
        return 0.0
    return math.log(rho / measure)


def coverage_index(stats: CoverageStats, n: int, schedule: PartitionSchedule, measure: float | None = None) -> float:
    t = stats.count
    dt = schedule.d_tilde(t)
    if not t > dt:
        raise ValueError(f"index needs t > d_tilde(t); t={t}, d_tilde={dt}")
    if measure is None:
        measure, _ = coverage_estimate(stats, schedule)
    return _coverage_index(measure, float(n), t, dt)


@dataclass(frozen=True)
class CoverageArm:
    support: SupportSet
    family: str = "coverage"

    def score(self) -> float:
        return self.support.measure

    def sample(self, u):
        return coverage_quantile(self.support, u)

    def M(self, rho: float) -> float:
        return coverage_M(self.support.measure, rho)


class CoveragePolicy:
    """UCB-COVERAGE with ``d_tilde(t) = d(t) + 1`` and ``n0`` the first t above it."""

    name = "ucb-coverage"

    def __init__(self, schedule: PartitionSchedule | None = None):
        self.schedule = schedule or PartitionSchedule()
        self.n0 = self.schedule.n0

    def d_tilde(self, t):
        return self.schedule.d_tilde(t)

    def new_stats(self):
        return CoverageStats()

    def update(self, stats, x):
        return coverage_update(stats, x)

    def index(self, arm, stats, n):
        return coverage_index(stats, n, self.schedule)
