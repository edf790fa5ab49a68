"""Brute-force reference computations used to cross-check the closed forms.

Every family exposes only its KL divergence, its score and a two-coordinate
parametrisation of the alternatives ``g``: a *secondary* coordinate scanned on
a grid and refined by golden-section search, and a *primary* coordinate along
which the score (and, past the estimate, the divergence) is monotone, solved
by bisection.  Nothing here calls the closed-form ``M`` or index functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .models.coverage import SupportSet
from .models.interval import IntervalParams, MonotoneScore2D
from .models.normal import NormalParams, ThresholdSpec
from .models.pareto import ParetoParams, SeparableScore
from .specfun import _norm_sf

RHO_MARGIN = 1e-12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class UnattainableScoreError(ValueError):
    """No alternative in the family reaches the requested score."""


class GridBoundaryError(RuntimeError):
    """The optimum sits on an artificial edge of the search grid."""


@dataclass(frozen=True)
class FamilyGrid:
    """Search range of the secondary coordinate.

    ``lo_hard``/``hi_hard`` mark edges that are real constraints of the family
    (an optimum there is legitimate); soft edges are truncations and an
    optimum on one means the grid is too narrow.
    """

    lo: float
    hi: float
    lo_hard: bool = False
    hi_hard: bool = False
    resolution: int = 64

    def points(self) -> np.ndarray:
        if self.lo == self.hi:
            return np.array([self.lo])
        return np.linspace(self.lo, self.hi, self.resolution)


def _bisect(pred: Callable[[float], bool], good: float, bad: float) -> float:
    """Last point on the ``good`` side of a monotone predicate, to full precision."""
    for _ in range(2000):
        mid = 0.5 * (good + bad)
        if mid == good or mid == bad:
            break
        if pred(mid):
            good = mid
        else:
            bad = mid
    return good


def _expand(pred: Callable[[float], bool], start: float, step: float, cap: float = 2.0**60) -> float:
    """Walk ``start + step * 2^k`` until ``pred`` fails; returns that first failing point."""
    k = 0
    while True:
        x = start + step * 2.0**k
        if not pred(x):
            return x
        k += 1
        if 2.0**k > cap:
            return math.inf


def _optimise(fn: Callable[[float], float], grid: FamilyGrid, maximise: bool) -> float:
    sign = 1.0 if maximise else -1.0
    pts = grid.points()
    vals = np.array([sign * fn(v) for v in pts])
    if np.all(vals == -math.inf):
        raise UnattainableScoreError("no feasible alternative on the search grid")
    k = int(np.argmax(vals))  # first maximiser: ties resolve toward lower parameters
    best = vals[k]
    if best == math.inf or len(pts) == 1:
        return sign * best
    if (k == 0 and not grid.lo_hard) or (k == len(pts) - 1 and not grid.hi_hard):
        raise GridBoundaryError(f"optimum on soft grid edge {pts[k]!r}")
    lo = pts[max(k - 1, 0)]
    hi = pts[min(k + 1, len(pts) - 1)]
    # Golden-section on the bracketing cells; the grid value itself is kept as a candidate.
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = sign * fn(x1), sign * fn(x2)
    for _ in range(200):
        if hi - lo <= 1e-15 * max(1.0, abs(lo), abs(hi)):
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = sign * fn(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = sign * fn(x2)
    return sign * max(best, f1, f2)


class OracleFamily:
    """Interface for the brute-force searches; see the concrete families below."""

    name: str

    def kl(self, f, g) -> float:
        raise NotImplementedError

    def score(self, g) -> float:
        raise NotImplementedError

    def m_grid(self, f, rho, resolution) -> FamilyGrid:
        raise NotImplementedError

    def index_grid(self, f, radius, resolution) -> FamilyGrid:
        raise NotImplementedError

    def m_at(self, f, v, rho) -> float:
        """Smallest divergence among alternatives with secondary coordinate ``v`` and score >= ``rho``."""
        raise NotImplementedError

    def index_at(self, f, v, radius) -> float:
        """Largest score among alternatives with secondary coordinate ``v`` inside the ball."""
        raise NotImplementedError


def m_oracle(family: OracleFamily, f, rho: float, resolution: int = 64) -> float:
    """Minimum divergence from ``f`` to an alternative scoring strictly above ``rho``."""
    if rho < family.score(f):
        return 0.0
    target = rho + RHO_MARGIN * max(1.0, abs(rho))
    grid = family.m_grid(f, rho, resolution)
    return _optimise(lambda v: family.m_at(f, v, target), grid, maximise=False)


def index_oracle(family: OracleFamily, fhat, radius: float, resolution: int = 64) -> float:
    """Supremum of the score over the closed divergence ball of ``radius`` around ``fhat``."""
    if not radius > 0.0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    grid = family.index_grid(fhat, radius, resolution)
    return _optimise(lambda v: family.index_at(fhat, v, radius), grid, maximise=True)


class ParetoFamily(OracleFamily):
    """Alternatives ``(alpha, beta)`` with ``beta <= beta_f``; secondary is ``beta``."""

    name = "pareto"

    def __init__(self, score: SeparableScore, floor_l: float | None = None):
        self.score_fn = score
        self.floor_l = score.floor_l if floor_l is None else floor_l

    def kl(self, f: ParetoParams, g: ParetoParams) -> float:
        if g.beta > f.beta:
            return math.inf
        return self._kl(f, g.alpha, g.beta)

    @staticmethod
    def _kl(f, alpha, beta):
        r = alpha / f.alpha
        return r - math.log(r) - 1.0 + alpha * math.log(f.beta / beta)

    def score(self, g: ParetoParams) -> float:
        return self.score_fn(g.alpha, g.beta)

    def _grid(self, f, resolution):
        return FamilyGrid(f.beta * math.exp(-4.0), f.beta, hi_hard=True, resolution=resolution)

    def m_grid(self, f, rho, resolution):
        return self._grid(f, resolution)

    def index_grid(self, f, radius, resolution):
        return self._grid(f, resolution)

    def _kl_argmin(self, f, beta):
        return 1.0 / (1.0 / f.alpha + math.log(f.beta / beta))

    def index_at(self, f, beta, radius):
        ell = self.floor_l
        centre = self._kl_argmin(f, beta)
        if self._kl(f, centre, beta) > radius:
            return -math.inf
        if ell > 0.0 and self._kl(f, ell, beta) <= radius:
            return math.inf
        alpha = _bisect(lambda a: self._kl(f, a, beta) <= radius, centre, ell)
        if not alpha > ell:
            return math.inf
        return self.score_fn(alpha, beta)

    def m_at(self, f, beta, rho):
        ell = self.floor_l
        hit = lambda a: a > ell and self.score_fn(a, beta) >= rho
        probe, k = f.alpha, 0
        while not hit(probe):
            k += 1
            if k > 200:
                raise UnattainableScoreError(f"score {rho!r} unreachable at beta={beta!r}")
            probe = ell + (f.alpha - ell) * 2.0**-k
        upper = _bisect(hit, probe, f.alpha) if not hit(f.alpha) else f.alpha
        return self._kl(f, min(upper, self._kl_argmin(f, beta)), beta)


class _NormalMeanVariance(OracleFamily):
    """Alternatives ``(mu, sigma)``; secondary is ``ln sigma``."""

    name = "normal_chk"

    def kl(self, f: NormalParams, g: NormalParams) -> float:
        return self._kl(f, g.mu, g.sigma)

    @staticmethod
    def _kl(f, mu, sigma):
        r = (f.sigma / sigma) ** 2
        return (f.mu - mu) ** 2 / (2.0 * sigma**2) + 0.5 * (r - math.log(r) - 1.0)

    def score(self, g: NormalParams) -> float:
        return g.mu

    def m_grid(self, f, rho, resolution):
        spread = math.log1p(((rho - f.mu) / f.sigma) ** 2) if rho > f.mu else 0.0
        c = math.log(f.sigma)
        return FamilyGrid(c - 2.0, c + 2.0 + spread, resolution=resolution)

    def index_grid(self, f, radius, resolution):
        # Span exactly the ln(sigma) values that keep some mean inside the ball.
        c = math.log(f.sigma)
        inside = lambda v: self._kl(f, f.mu, math.exp(v)) <= radius
        lo = _bisect(inside, c, c - _expand(lambda w: inside(c - w), 0.0, 1.0))
        hi = _bisect(inside, c, _expand(lambda v: inside(c + v), 0.0, 1.0) + c)
        return FamilyGrid(lo, hi, lo_hard=True, hi_hard=True, resolution=resolution)

    def index_at(self, f, v, radius):
        sigma = math.exp(v)
        inside = lambda mu: self._kl(f, mu, sigma) <= radius
        if not inside(f.mu):
            return -math.inf
        out = _expand(inside, f.mu, sigma)
        return _bisect(inside, f.mu, out)

    def m_at(self, f, v, rho):
        sigma = math.exp(v)
        short = lambda mu: self.score(NormalParams(mu, sigma)) < rho
        mu = math.nextafter(_bisect(short, f.mu, _expand(short, f.mu, sigma)), math.inf)
        return self._kl(f, mu, sigma)


class NormalChkFamily(_NormalMeanVariance):
    pass


class NormalVarianceFamily(OracleFamily):
    """Equal-mean alternatives; the only free coordinate is the precision ``1/sigma^2``."""

    name = "normal_var"

    def kl(self, f: NormalParams, g: NormalParams) -> float:
        if g.mu != f.mu:
            return math.inf
        return self._kl(f, 1.0 / g.sigma**2)

    @staticmethod
    def _kl(f, precision):
        r = f.sigma**2 * precision
        return 0.5 * (r - math.log(r) - 1.0)

    def score(self, g: NormalParams) -> float:
        return 1.0 / g.sigma**2

    def m_grid(self, f, rho, resolution):
        return FamilyGrid(0.0, 0.0)

    index_grid = m_grid

    def index_at(self, f, _, radius):
        q0 = 1.0 / f.sigma**2
        inside = lambda q: self._kl(f, q) <= radius
        return _bisect(inside, q0, _expand(inside, q0, q0))

    def m_at(self, f, _, rho):
        q0 = 1.0 / f.sigma**2
        if q0 >= rho:
            return 0.0
        short = lambda q: self.score(NormalParams(f.mu, q**-0.5)) < rho
        q = _bisect(short, q0, _expand(short, q0, q0))
        return self._kl(f, math.nextafter(q, math.inf))


class NormalThresholdFamily(OracleFamily):
    """Known-sigma alternatives; the only free coordinate is the mean."""

    name = "normal_thr"

    def __init__(self, spec: ThresholdSpec):
        self.spec = spec

    def kl(self, f: float, g: float) -> float:
        return (f - g) ** 2 / (2.0 * self.spec.known_sigma**2)

    def score(self, g: float) -> float:
        return _norm_sf((self.spec.kappa - g) / self.spec.known_sigma)

    def m_grid(self, f, rho, resolution):
        return FamilyGrid(0.0, 0.0)

    index_grid = m_grid

    def index_at(self, f, _, radius):
        inside = lambda mu: self.kl(f, mu) <= radius
        mu = _bisect(inside, f, _expand(inside, f, self.spec.known_sigma))
        return self.score(mu)

    def m_at(self, f, _, rho):
        if not rho < 1.0:
            raise UnattainableScoreError(f"tail probability {rho!r} is not attainable")
        short = lambda mu: self.score(mu) < rho
        mu = _bisect(short, f, _expand(short, f, self.spec.known_sigma))
        return self.kl(f, math.nextafter(mu, math.inf))


def _gaps(support: SupportSet) -> list[tuple[float, float]]:
    out, left = [], 0.0
    for a, b in support.intervals:
        if a > left:
            out.append((left, a))
        left = b
    if left < 1.0:
        out.append((left, 1.0))
    return out


def fill_gaps(support: SupportSet, length: float) -> list[tuple[float, float]]:
    """Superset of ``support`` adding ``length`` of the complement, filling gaps left to right."""
    pieces = list(support.intervals)
    for a, b in _gaps(support):
        if length <= 0.0:
            break
        take = min(b - a, length)
        pieces.append((a, a + take))
        length -= take
    pieces.sort()
    merged = [list(pieces[0])]
    for a, b in pieces[1:]:
        if a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [tuple(p) for p in merged]


class CoverageFamily(OracleFamily):
    """Supersets of the support; the primary coordinate is the added length."""

    name = "coverage"

    def kl(self, f: SupportSet, g) -> float:
        g_intervals = g.intervals if isinstance(g, SupportSet) else g
        if not all(any(a <= c and d <= b for a, b in g_intervals) for c, d in f.intervals):
            return math.inf
        return math.log(sum(b - a for a, b in g_intervals) / f.measure)

    def score(self, g) -> float:
        g_intervals = g.intervals if isinstance(g, SupportSet) else g
        return sum(b - a for a, b in g_intervals)

    def m_grid(self, f, rho, resolution):
        return FamilyGrid(0.0, 0.0)

    index_grid = m_grid

    def _superset(self, f, length):
        return fill_gaps(f, length)

    def index_at(self, f, _, radius):
        room = 1.0 - f.measure
        inside = lambda L: self.kl(f, self._superset(f, L)) <= radius
        if inside(room):
            return 1.0
        return self.score(self._superset(f, _bisect(inside, 0.0, room)))

    def m_at(self, f, _, rho):
        room = 1.0 - f.measure
        if rho > 1.0 + RHO_MARGIN:
            raise UnattainableScoreError(f"measure {rho!r} exceeds 1")
        if rho >= 1.0:
            # Closure of the family: the full interval is the limit of its supersets.
            return math.log(1.0 / f.measure)
        short = lambda L: self.score(self._superset(f, L)) < rho
        L = math.nextafter(_bisect(short, 0.0, room), math.inf)
        return self.kl(f, self._superset(f, L))


class IntervalFamily(OracleFamily):
    """Enclosing intervals ``[a', b']``; secondary is the left extension ``a - a'``."""

    name = "interval"

    def __init__(self, score: MonotoneScore2D):
        self.score_fn = score

    def kl(self, f: IntervalParams, g: IntervalParams) -> float:
        if g.low <= f.low and f.high <= g.high:
            return math.log((g.high - g.low) / (f.high - f.low))
        return math.inf

    def score(self, g: IntervalParams) -> float:
        return self.score_fn(g.low, g.high)

    def m_grid(self, f, rho, resolution):
        return FamilyGrid(0.0, 4.0 * (f.high - f.low), lo_hard=True, resolution=resolution)

    def index_grid(self, f, radius, resolution):
        return FamilyGrid(0.0, (f.high - f.low) * math.expm1(radius), lo_hard=True, hi_hard=True,
                          resolution=resolution)

    def _width_kl(self, f, left, right):
        return math.log((right - left) / (f.high - f.low))

    def index_at(self, f, v, radius):
        left = f.low - v
        inside = lambda b: self._width_kl(f, left, b) <= radius
        if not inside(f.high):
            return -math.inf
        right = _bisect(inside, f.high, _expand(inside, f.high, f.high - f.low))
        return self.score_fn(left, right)

    def m_at(self, f, v, rho):
        left = f.low - v
        short = lambda b: self.score_fn(left, b) < rho
        if not short(f.high):
            return self._width_kl(f, left, f.high)
        out = _expand(short, f.high, f.high - f.low)
        if out == math.inf:
            raise UnattainableScoreError(f"score {rho!r} not reached")
        right = math.nextafter(_bisect(short, f.high, out), math.inf)
        return self._width_kl(f, left, right)


# Distributional references for the estimator laws and tail bounds.

def range_cdf(t: int, lam: float) -> float:
    """P(range of t uniforms / interval width < lam) = (t(1 - lam) + lam) lam^(t - 1)."""
    if int(t) != t or t < 2:
        raise ValueError(f"t must be an integer >= 2, got {t!r}")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")
    return (t * (1.0 - lam) + lam) * lam ** (t - 1)


def chernoff_bounds(kind: str, t: int, g: float, tail: str | None = None) -> float:
    """Chernoff bound on a Gamma(t, 1) or chi-square(t) tail at ``t * g``.

    ``tail`` is ``"lower"`` (requires ``g <= 1``) or ``"upper"`` (``g >= 1``);
    when omitted it follows the side of ``g``.
    """
    if kind not in ("gamma", "chi2"):
        raise ValueError(f"kind must be 'gamma' or 'chi2', got {kind!r}")
    if not g > 0.0:
        raise ValueError(f"g must be positive, got {g!r}")
    if tail is None:
        tail = "lower" if g <= 1.0 else "upper"
    if tail == "lower" and g > 1.0 or tail == "upper" and g < 1.0:
        raise ValueError(f"g={g} is on the wrong side of 1 for the {tail} tail")
    if tail not in ("lower", "upper"):
        raise ValueError(f"tail must be 'lower' or 'upper', got {tail!r}")
    power = t if kind == "gamma" else t / 2.0
    return (g * math.exp(1.0 - g)) ** power


def normal_tail_bound(z: float) -> float:
    if not z >= 0.0:
        raise ValueError("z must be non-negative")
    return 0.5 * math.exp(-0.5 * z * z)


def gamma_cdf(x: float, shape: float, terms: int = 10_000) -> float:
    """Regularised lower incomplete gamma P(shape, x) by its power series."""
    if x <= 0.0:
        return 0.0
    # Summing x^k / (shape)_(k+1); converges for all x, quickly once k > x.
    term = 1.0 / shape
    total = term
    for k in range(1, terms):
        term *= x / (shape + k)
        total += term
        if term < total * 1e-17:
            break
    log_front = shape * math.log(x) - x - math.lgamma(shape)
    return min(1.0, total * math.exp(log_front))


def pareto_cdf(x: float, alpha: float, beta: float = 1.0) -> float:
    return 0.0 if x <= beta else 1.0 - (beta / x) ** alpha


def ks_statistic(samples: Sequence[float], cdf: Callable[[float], float]) -> float:
    """Kolmogorov-Smirnov sup distance between the empirical CDF and ``cdf``."""
    xs = np.sort(np.asarray(samples, dtype=float))
    m = len(xs)
    if m == 0:
        raise ValueError("need at least one sample")
    ref = np.array([cdf(x) for x in xs])
    upper = np.arange(1, m + 1) / m - ref
    lower = ref - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))


def ks_critical(m: int, level: float = 0.01) -> float:
    """Asymptotic KS critical value; 1.63/sqrt(m) at the 1% level."""
    c = {0.01: 1.63, 0.05: 1.36, 0.1: 1.22}.get(level)
    if c is None:
        c = special.kolmogi(level)
    return c / math.sqrt(m)
