"""Closed-form versus brute-force comparisons on small parameter grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .models import coverage as cov
from .models import interval as itv
from .models import normal as nrm
from .models import pareto as par

# Sample sizes and clocks used for the index comparisons.
INDEX_CASES = ((5, 10), (8, 1000), (20, 50), (60, 100_000), (200, 10**7))
M_LEVELS = (1.02, 1.1, 1.3, 1.7, 2.5)


@dataclass
class CheckReport:
    family: str
    m_error: float = 0.0
    index_error: float = 0.0
    duality_excess: float = 0.0
    cases: int = 0
    rows: list = field(default_factory=list)

    def passed(self, m_tol=1e-6, index_tol=1e-8) -> bool:
        return self.m_error <= m_tol and self.index_error <= index_tol and self.duality_excess <= m_tol


def _err(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b)


def _record(report, kind, label, closed, oracle):
    e = _err(closed, oracle)
    report.rows.append((kind, label, closed, oracle, e))
    report.cases += 1
    if kind == "M":
        report.m_error = max(report.m_error, e)
    else:
        report.index_error = max(report.index_error, e)


def _duality(report, family, f, radius, resolution):
    c = oracles.index_oracle(family, f, radius, resolution)
    if not math.isfinite(c):
        return
    try:
        m = oracles.m_oracle(family, f, c, resolution)
    except oracles.UnattainableScoreError:
        return
    report.duality_excess = max(report.duality_excess, m - radius)


def _pareto(report, resolution):
    params = [par.ParetoParams(a, b) for a, b in ((1.5, 1.0), (2.0, 1.0), (2.5, 0.5), (3.0, 2.0), (5.0, 1.5))]
    for score in (par.TAIL_SCORE, par.MEAN_SCORE, par.MEDIAN_SCORE):
        fam = oracles.ParetoFamily(score)
        for f in params:
            if not f.alpha > score.floor_l:
                continue
            s = score(f.alpha, f.beta)
            for lev in M_LEVELS:
                rho = s * lev
                _record(report, "M", f"{score.tag} {f} rho={rho:.6g}",
                        par.pareto_M(f, rho, score), oracles.m_oracle(fam, f, rho, resolution))
        for f in params:
            for t, n in INDEX_CASES:
                stats = par.ParetoStats(t, f.beta, (t - 1) / f.alpha)
                fhat = par.pareto_estimate(stats)
                radius = math.log(n) / (t - 2)
                _record(report, "index", f"{score.tag} {f} t={t} n={n}",
                        par.pareto_index(stats, n, score, score.floor_l),
                        oracles.index_oracle(fam, fhat, radius, resolution))
            _duality(report, fam, f, 0.3, resolution)


def _coverage(report, resolution):
    fam = oracles.CoverageFamily()
    supports = [
        cov.SupportSet(((0.0, 0.5),)),
        cov.SupportSet(((0.0, 0.3), (0.6, 0.9))),
        cov.SupportSet(((0.1, 0.2),)),
        cov.SupportSet(((0.0, 0.05), (0.5, 0.55), (0.9, 0.95))),
        cov.SupportSet(((0.2, 0.9),)),
    ]
    for S in supports:
        for lev in M_LEVELS:
            rho = min(S.measure * lev, 1.0)
            _record(report, "M", f"{S.intervals} rho={rho:.6g}",
                    cov.coverage_M(S.measure, rho), oracles.m_oracle(fam, S, rho, resolution))
    schedule = cov.PartitionSchedule()
    for S in supports:
        for t, n in INDEX_CASES:
            # Evenly spread samples inside the support give a known occupancy pattern.
            u = (np.arange(t) + 0.5) / t
            stats = cov.CoverageStats(np.asarray(cov.coverage_quantile(S, u)))
            measure, mask = cov.coverage_estimate(stats, schedule)
            if measure >= 1.0:
                continue
            shat = occupied_support(mask)
            radius = math.log(n) / (t - schedule.d_tilde(t))
            _record(report, "index", f"{S.intervals} t={t} n={n}",
                    cov.coverage_index(stats, n, schedule), oracles.index_oracle(fam, shat, radius, resolution))
        _duality(report, fam, S, 0.2, resolution)


def occupied_support(mask) -> cov.SupportSet:
    """Union of the occupied cells of a uniform partition, as merged intervals."""
    d = len(mask)
    pieces, start = [], None
    for k, hit in enumerate(list(mask) + [False]):
        if hit and start is None:
            start = k
        elif not hit and start is not None:
            pieces.append((start / d, k / d))
            start = None
    return cov.SupportSet(tuple(pieces))


def _interval(report, resolution):
    params = [itv.IntervalParams(a, b) for a, b in ((0.0, 1.0), (0.0, 0.8), (-1.0, 2.0), (0.3, 0.4), (2.0, 7.0))]
    scores = [itv.MEAN_SCORE, itv.monotone_score(lambda a, b: a + 3.0 * b, tag="a+3b")]
    for score in scores:
        fam = oracles.IntervalFamily(score)
        for f in params:
            s = score(f.low, f.high)
            for lev in M_LEVELS:
                rho = s + (lev - 1.0) * max(1.0, abs(s))
                closed = itv.interval_M(f, rho, score)
                _record(report, "M", f"{score.tag} {f} rho={rho:.6g}", closed,
                        oracles.m_oracle(fam, f, rho, resolution))
            for t, n in INDEX_CASES:
                stats = itv.IntervalStats(t, f.low, f.high)
                radius = math.log(n) / (t - 2)
                _record(report, "index", f"{score.tag} {f} t={t} n={n}",
                        itv.interval_index(stats, n, score), oracles.index_oracle(fam, f, radius, resolution))
            _duality(report, fam, f, 0.3, resolution)


_NORMAL_PARAMS = [nrm.NormalParams(m, s) for m, s in ((0.0, 1.0), (0.5, 1.0), (-2.0, 0.5), (1.0, 2.0), (3.0, 0.2))]


def _normal_chk(report, resolution):
    fam = oracles.NormalChkFamily()
    for f in _NORMAL_PARAMS:
        for lev in M_LEVELS:
            rho = f.mu + (lev - 1.0) * 2.0 * f.sigma
            _record(report, "M", f"{f} rho={rho:.6g}", nrm.m_chk(f, rho), oracles.m_oracle(fam, f, rho, resolution))
        for t, n in INDEX_CASES:
            stats = nrm.NormalStats(t, f.mu, f.sigma**2 * (t - 1))
            fhat = nrm.NormalParams(stats.mean, math.sqrt(stats.variance))
            radius = math.log(n) / (t - 2)
            _record(report, "index", f"{f} t={t} n={n}",
                    nrm.index_chk(stats, n), oracles.index_oracle(fam, fhat, radius, resolution))
        _duality(report, fam, f, 0.3, resolution)


def _normal_var(report, resolution):
    fam = oracles.NormalVarianceFamily()
    for f in _NORMAL_PARAMS:
        s = 1.0 / f.sigma**2
        for lev in M_LEVELS:
            _record(report, "M", f"{f} rho={s * lev:.6g}",
                    nrm.m_var(f, s * lev), oracles.m_oracle(fam, f, s * lev, resolution))
        for t, n in INDEX_CASES:
            stats = nrm.NormalStats(t, f.mu, f.sigma**2 * (t - 1))
            fhat = nrm.NormalParams(stats.mean, math.sqrt(stats.variance))
            radius = math.log(n) / (t - 2)
            _record(report, "index", f"{f} t={t} n={n}",
                    nrm.index_var(stats, n), oracles.index_oracle(fam, fhat, radius, resolution))
        _duality(report, fam, f, 0.3, resolution)


def _normal_thr(report, resolution):
    specs = [nrm.ThresholdSpec(k, s) for k, s in ((1.0, 1.0), (0.0, 2.0), (2.0, 0.5), (-1.0, 1.5), (3.0, 1.0))]
    for spec in specs:
        fam = oracles.NormalThresholdFamily(spec)
        for mu in (spec.kappa - 2.0 * spec.known_sigma, spec.kappa, spec.kappa + 0.5 * spec.known_sigma):
            s = nrm.threshold_score(mu, spec)
            for lev in M_LEVELS:
                rho = s + (1.0 - s) * (1.0 - 1.0 / lev)
                _record(report, "M", f"{spec} mu={mu} rho={rho:.6g}",
                        nrm.m_threshold(mu, spec, rho), oracles.m_oracle(fam, mu, rho, resolution))
        for t, n in INDEX_CASES:
            mu = spec.kappa - spec.known_sigma
            stats = nrm.NormalStats(t, mu, 1.0)
            radius = math.log(n) / (t - 1)
            _record(report, "index", f"{spec} t={t} n={n}",
                    nrm.index_threshold(stats, n, spec), oracles.index_oracle(fam, mu, radius, resolution))
        _duality(report, fam, spec.kappa - spec.known_sigma, 0.3, resolution)


CHECKS = {
    "pareto": _pareto,
    "coverage": _coverage,
    "interval": _interval,
    "normal_chk": _normal_chk,
    "normal_var": _normal_var,
    "normal_thr": _normal_thr,
}


def check_family(name: str, resolution: int = 64) -> CheckReport:
    if name not in CHECKS:
        raise ValueError(f"unknown family {name!r}; expected one of {sorted(CHECKS)}")
    report = CheckReport(name)
    CHECKS[name](report, resolution)
    return report
