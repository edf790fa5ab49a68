"""Monte Carlo checks of the estimator distributions and tail bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import oracles
from .engine import open_uniforms, stream_generator

GAMMA_T = (5, 20, 100)
LOWER_G = (0.5, 0.8)
UPPER_G = (1.5, 2.0)
NORMAL_Z = (0.5, 1.0, 2.0)


@dataclass(frozen=True)
class BoundRow:
    check: str
    empirical: float
    analytic: float
    passed: bool


def _tail_rows(kind, draw, draws, rng):
    rows = []
    for t in GAMMA_T:
        x = draw(rng, t, draws)
        for g in LOWER_G:
            emp = float(np.mean(x < g * t))
            bound = oracles.chernoff_bounds(kind, t, g, "lower")
            rows.append(BoundRow(f"{kind} t={t} lower g={g}", emp, bound, emp <= bound))
        for g in UPPER_G:
            emp = float(np.mean(x > g * t))
            bound = oracles.chernoff_bounds(kind, t, g, "upper")
            rows.append(BoundRow(f"{kind} t={t} upper g={g}", emp, bound, emp <= bound))
    return rows


def gamma_bounds(draws: int, seed: int) -> list[BoundRow]:
    return _tail_rows("gamma", lambda rng, t, m: rng.gamma(t, 1.0, m), draws, stream_generator(seed))


def chi2_bounds(draws: int, seed: int) -> list[BoundRow]:
    return _tail_rows("chi2", lambda rng, t, m: rng.chisquare(t, m), draws, stream_generator(seed))


def normal_bounds(draws: int, seed: int) -> list[BoundRow]:
    z = stream_generator(seed).standard_normal(draws)
    rows = []
    for c in NORMAL_Z:
        emp = float(np.mean(z > c))
        bound = oracles.normal_tail_bound(c)
        rows.append(BoundRow(f"normal z={c}", emp, bound, emp <= bound))
    return rows


def range_checks(draws: int, seed: int, cases=((5, 0.7), (2, 0.5))) -> list[BoundRow]:
    """Monte Carlo range CDF within three binomial standard errors of the exact value."""
    rng = stream_generator(seed)
    rows = []
    for t, lam in cases:
        u = open_uniforms(rng, (draws, t))
        freq = float(np.mean(u.max(axis=1) - u.min(axis=1) < lam))
        exact = oracles.range_cdf(t, lam)
        se = math.sqrt(exact * (1.0 - exact) / draws)
        rows.append(BoundRow(f"range t={t} lambda={lam} (3 se = {3 * se:.2e})", freq, exact,
                             abs(freq - exact) <= 3.0 * se))
    return rows


@dataclass(frozen=True)
class EstimatorCheck:
    ks_shape: float
    ks_scale: float
    critical: float
    correlation: float

    @property
    def rows(self) -> list[BoundRow]:
        return [
            BoundRow("KS shape vs Gamma(t-1,1)", self.ks_shape, self.critical, self.ks_shape < self.critical),
            BoundRow("KS scale vs Pareto(alpha t,1)", self.ks_scale, self.critical, self.ks_scale < self.critical),
            BoundRow("|corr(shape, scale)| vs 0.05", abs(self.correlation), 0.05, abs(self.correlation) < 0.05),
        ]


def pareto_estimator_check(draws: int, seed: int, t: int = 20, alpha: float = 2.0, beta: float = 1.0) -> EstimatorCheck:
    """Distribution of the Pareto estimators on ``draws`` samples of size ``t``."""
    rng = stream_generator(seed)
    x = beta * (1.0 - open_uniforms(rng, (draws, t))) ** (-1.0 / alpha)
    beta_hat = x.min(axis=1)
    alpha_hat = (t - 1) / np.log(x / beta_hat[:, None]).sum(axis=1)
    shape = alpha / alpha_hat * (t - 1)
    scale = beta_hat / beta
    ks_shape = oracles.ks_statistic(shape, lambda v: oracles.gamma_cdf(v, t - 1))
    ks_scale = oracles.ks_statistic(scale, lambda v: oracles.pareto_cdf(v, alpha * t))
    corr = float(np.corrcoef(shape, scale)[0, 1])
    return EstimatorCheck(ks_shape, ks_scale, oracles.ks_critical(draws), corr)


def estimator_checks(draws: int, seed: int) -> list[BoundRow]:
    return pareto_estimator_check(draws, seed).rows


BOUND_CHECKS = {
    "gamma": gamma_bounds,
    "chi2": chi2_bounds,
    "normal": normal_bounds,
    "range": range_checks,
    "estimators": estimator_checks,
}
