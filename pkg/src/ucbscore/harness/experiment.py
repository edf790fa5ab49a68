"""Seeded replications, aggregation into pull curves, slope fits and CSV output."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import engine, oracles
from . import config as cfgmod
from .kernel import FAMILY_CODES, simulate

CSV_HEADER = ["arm", "horizon", "mean_pulls", "se_pulls", "is_optimal", "target_inv_M", "fitted_slope", "slope_se"]
SLOPE_EXCLUDE_THRESHOLD = 100


class TargetError(ValueError):
    """A suboptimal arm has no positive finite asymptotic target."""


@dataclass
class RegretCurve:
    family: str
    horizons: tuple[int, ...]
    mean_pulls: np.ndarray  # (K, N)
    se_pulls: np.ndarray  # (K, N)
    is_optimal: np.ndarray  # (N,)
    target_inv_M: np.ndarray  # (N,), NaN for optimal arms
    slope: np.ndarray  # (N,), NaN for optimal arms
    slope_se: np.ndarray
    slope_horizons: tuple[int, ...]
    meta: dict = field(default_factory=dict)

    @property
    def suboptimal_mean(self) -> np.ndarray:
        """Mean total pulls of suboptimal arms at each horizon."""
        return self.mean_pulls[:, ~self.is_optimal].sum(axis=1)

    def uf_ratios(self, power: float = 0.25) -> np.ndarray:
        h = np.asarray(self.horizons, dtype=float)
        return self.suboptimal_mean / h**power

    def log_ratios(self) -> np.ndarray:
        """Mean pulls divided by ln n, per horizon and arm."""
        return self.mean_pulls / np.log(np.asarray(self.horizons, dtype=float))[:, None]


def fit_slope(points) -> tuple[float, float]:
    """Least-squares slope of ``y`` on ``x`` with its residual standard error."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least three (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ValueError("x values are all equal")
    slope = float(xc @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xc
    se = math.sqrt(float(resid @ resid) / (len(x) - 2) / sxx)
    return slope, se


def oracle_family(cfg: cfgmod.ExperimentConfig, arm):
    fam = cfg.family
    if fam == "pareto":
        return oracles.ParetoFamily(arm.score_fn, arm.params.floor_l), arm.params
    if fam == "coverage":
        return oracles.CoverageFamily(), arm.support
    if fam == "interval":
        return oracles.IntervalFamily(arm.score_fn), arm.params
    if fam == "normal_chk":
        return oracles.NormalChkFamily(), arm.params
    if fam == "normal_var":
        return oracles.NormalVarianceFamily(), arm.params
    return oracles.NormalThresholdFamily(arm.spec), arm.mu


def targets(cfg: cfgmod.ExperimentConfig, mode: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Optimal-arm mask and ``1/M(s*)`` per arm (NaN for optimal arms)."""
    mode = mode or cfg.target_mode
    arms = cfgmod.build_arms(cfg)
    optimal = engine.optimal_set(arms)
    s_star = max(arm.score() for arm in arms)
    out = np.full(len(arms), np.nan)
    for i, arm in enumerate(arms):
        if optimal[i]:
            continue
        if mode == "oracle":
            fam, f = oracle_family(cfg, arm)
            m = oracles.m_oracle(fam, f, s_star)
        else:
            m = arm.M(s_star)
        if not (m > 0.0 and math.isfinite(m)):
            raise TargetError(f"arm {i}: M(s*) = {m!r}; its score ties the optimum or is unreachable")
        out[i] = 1.0 / m
    return optimal, out


def _kernel_inputs(cfg, arms, policy):
    fam = cfg.family
    gpar = np.zeros(2)
    sigma = np.ones(len(arms))
    if fam == "pareto":
        gpar[:] = (policy.score.code, policy.floor_l)
    elif fam == "coverage":
        gpar[0] = policy.schedule.code
    elif fam == "normal_thr":
        gpar[0] = float(cfg.shared["kappa"])
        sigma = np.array([arm.spec.known_sigma for arm in arms])
    return FAMILY_CODES[fam], gpar, sigma


def run_replication(cfg: cfgmod.ExperimentConfig, r: int, use_kernel: bool = True) -> np.ndarray:
    """Pull counts (K x N) at each configured horizon for replication ``r``."""
    arms = cfgmod.build_arms(cfg)
    policy = cfgmod.build_policy(cfg)
    horizon = cfg.horizons[-1]
    checkpoints = np.asarray(cfg.horizons, dtype=np.int64)
    seed = (cfg.seed, r)
    if not use_kernel:
        trace = engine.run_horizon(arms, policy, horizon, seed, checkpoints)
        return np.array([trace.checkpoint_pulls[h] for h in cfg.horizons], dtype=np.int64)
    tapes, ties = engine.draw_tapes(arms, horizon, seed)
    code, gpar, sigma = _kernel_inputs(cfg, arms, policy)
    return simulate(code, gpar, sigma, tapes, ties, policy.n0, checkpoints, np.empty(0, np.int64))


def _run_block(args) -> np.ndarray:
    cfg, reps, use_kernel = args
    return np.stack([run_replication(cfg, r, use_kernel) for r in reps])


def _blocks(replications: int, workers: int) -> list[range]:
    size = max(1, math.ceil(replications / (4 * workers)))
    return [range(a, min(a + size, replications)) for a in range(0, replications, size)]


def run_pulls(cfg: cfgmod.ExperimentConfig, use_kernel: bool = True, workers: int | None = None) -> np.ndarray:
    """All replications, stacked in replication order: (R, K, N)."""
    workers = workers or cfg.workers
    blocks = _blocks(cfg.replications, workers)
    if workers == 1:
        parts = [_run_block((cfg, b, use_kernel)) for b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, [(cfg, b, use_kernel) for b in blocks]))
    return np.concatenate(parts, axis=0)


def slope_horizons(cfg: cfgmod.ExperimentConfig) -> tuple[int, ...]:
    policy = cfgmod.build_policy(cfg)
    if policy.n0 * len(cfg.arms) > SLOPE_EXCLUDE_THRESHOLD:
        return cfg.horizons[1:]
    return cfg.horizons


def aggregate(cfg: cfgmod.ExperimentConfig, pulls: np.ndarray) -> RegretCurve:
    R = pulls.shape[0]
    # Integer sums are exact, so the mean does not depend on how replications were split.
    mean = pulls.sum(axis=0) / R
    se = pulls.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.full(mean.shape, np.nan)
    optimal, target = targets(cfg)
    used = slope_horizons(cfg)
    rows = [cfg.horizons.index(h) for h in used]
    slope = np.full(len(cfg.arms), np.nan)
    slope_se = np.full(len(cfg.arms), np.nan)
    if len(used) >= 3:
        x = np.log(np.asarray(used, dtype=float))
        for i in np.flatnonzero(~optimal):
            slope[i], slope_se[i] = fit_slope(np.column_stack([x, mean[rows, i]]))
    meta = {
        "config": cfgmod.to_dict(cfg),
        "n0": cfgmod.build_policy(cfg).n0,
        "slope_horizons": list(used),
        "smallest_horizon_excluded": len(used) < len(cfg.horizons),
        "seed_streams": "philox(seed, replication)",
    }
    return RegretCurve(cfg.family, tuple(cfg.horizons), mean, se, optimal, target, slope, slope_se, tuple(used), meta)


def run_experiment(cfg: cfgmod.ExperimentConfig, use_kernel: bool = True, workers: int | None = None) -> RegretCurve:
    targets(cfg)  # fail before simulating if a suboptimal arm has no target
    return aggregate(cfg, run_pulls(cfg, use_kernel, workers))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.9g" % v


def emit_csv(curve: RegretCurve, path) -> Path:
    """Write the curve as CSV plus a ``.meta.json`` sidecar; returns the CSV path."""
    path = Path(path)
    rows = []
    for i in range(curve.mean_pulls.shape[1]):
        opt = bool(curve.is_optimal[i])
        for k, h in enumerate(curve.horizons):
            rows.append([
                str(i),
                str(h),
                _fmt(float(curve.mean_pulls[k, i])),
                _fmt(float(curve.se_pulls[k, i])),
                _fmt(opt),
                "" if opt else _fmt(float(curve.target_inv_M[i])),
                "" if opt or math.isnan(curve.slope[i]) else _fmt(float(curve.slope[i])),
                "" if opt or math.isnan(curve.slope_se[i]) else _fmt(float(curve.slope_se[i])),
            ])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            writer.writerows(rows)
        meta_path = path.with_name(path.name + ".meta.json")
        meta_path.write_text(json.dumps(curve.meta, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
