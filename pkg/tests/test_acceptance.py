"""End-to-end acceptance suite.

Run with ``pytest tests/test_acceptance.py -s`` to see each check as it
finishes; a per-criterion summary is printed at the end either way.  The
simulation criteria (5 to 7) run 2000 replications of six scenarios and take
several minutes; deselect them with ``-m "not slow"``.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from ucbscore import crosscheck, diagnostics
from ucbscore.harness import config as cfgmod
from ucbscore.harness import experiment

CONFIGS = Path(__file__).parent.parent / "configs"

# Scenario config, analytic 1/M of the suboptimal arm (rounded as published).
SCENARIOS = {
    "normal_chk": ("normal_chk.yaml", 8.963),
    "pareto_tail": ("pareto_tail.yaml", 5.177),
    "coverage": ("coverage.yaml", 2.128),
    "interval": ("interval.yaml", 4.481),
    "normal_var": ("normal_var.yaml", 6.518),
    "normal_thr": ("normal_thr.yaml", 2.0),
}
SLOPE_BAND = 0.40
RATIO_FACTOR = 2.0


def test_criterion_1_oracle_equivalence(verdict):
    start = time.perf_counter()
    ok = True
    for name in sorted(crosscheck.CHECKS):
        rep = crosscheck.check_family(name, 64)
        ok &= verdict(1, name, rep.passed(1e-6, 1e-8),
                      f"{rep.cases} cases, max |dM| {rep.m_error:.2e}, max |d index| {rep.index_error:.2e}, "
                      f"duality excess {rep.duality_excess:.2e}")
    elapsed = time.perf_counter() - start
    ok &= verdict(1, "runtime", elapsed < 120.0, f"{elapsed:.1f} s (limit 120 s)")
    assert ok


def test_criterion_2_range_cdf(verdict):
    ok = True
    for row in diagnostics.range_checks(100_000, seed=0, cases=((5, 0.7), (2, 0.5))):
        ok &= verdict(2, row.check, row.passed, f"empirical {row.empirical:.5f} vs exact {row.analytic:.6f}")
    assert ok


def test_criterion_3_estimator_distributions(verdict):
    ok = True
    for row in diagnostics.pareto_estimator_check(10_000, seed=0).rows:
        ok &= verdict(3, row.check, row.passed, f"{row.empirical:.4f} vs {row.analytic:.4f}")
    assert ok


def test_criterion_4_tail_bounds(verdict):
    ok = True
    for check in ("gamma", "chi2", "normal"):
        for row in diagnostics.BOUND_CHECKS[check](100_000, 0):
            ok &= verdict(4, row.check, row.passed, f"empirical {row.empirical:.4g} <= bound {row.analytic:.4g}")
    assert ok


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    """Each scenario at full size: config, curve, CSV path, wall time."""
    out = {}
    root = tmp_path_factory.mktemp("acceptance")
    for name, (fname, _) in SCENARIOS.items():
        cfg = cfgmod.load_config(CONFIGS / fname).with_overrides(workers=1)
        start = time.perf_counter()
        curve = experiment.run_experiment(cfg)
        elapsed = time.perf_counter() - start
        path = experiment.emit_csv(curve, root / f"{name}.csv")
        out[name] = (cfg, curve, path, elapsed)
    return out


def _suboptimal(curve):
    (idx,) = np.flatnonzero(~curve.is_optimal)
    return idx


@pytest.mark.slow
@pytest.mark.parametrize("name", list(SCENARIOS))
def test_criterion_5_slopes(runs, name, verdict):
    cfg, curve, _, elapsed = runs[name]
    assert cfg.replications >= 2000 and cfg.horizons == (1000, 10_000, 100_000)
    i = _suboptimal(curve)
    target = curve.target_inv_M[i]
    published = SCENARIOS[name][1]
    ratios = curve.log_ratios()[:, i]
    distance = np.abs(ratios - target)
    slope_ok = abs(curve.slope[i] - target) <= SLOPE_BAND * target
    ratio_ok = target / RATIO_FACTOR <= ratios[-1] <= target * RATIO_FACTOR
    trend_ok = bool(np.all(np.diff(distance) <= 0))
    detail = (f"target {target:.4f}, slope {curve.slope[i]:.3f} +- {curve.slope_se[i]:.3f} "
              f"({(curve.slope[i] / target - 1) * 100:+.1f}%), T/ln n {np.round(ratios, 3).tolist()}, "
              f"|T/ln n - target| {np.round(distance, 3).tolist()}, {elapsed:.0f} s")
    checks = [
        verdict(5, f"{name} target", abs(target - published) <= 1e-3 * max(1.0, published), f"{target:.5f}"),
        verdict(5, f"{name} slope within 40%", slope_ok, detail),
        verdict(5, f"{name} T(1e5)/ln(1e5) within factor 2", ratio_ok, f"{ratios[-1]:.3f} vs {target:.3f}"),
        verdict(5, f"{name} monotone approach", trend_ok, f"distances {np.round(distance, 4).tolist()}"),
    ]
    assert all(checks)


@pytest.mark.slow
@pytest.mark.parametrize("name", list(SCENARIOS))
def test_criterion_6_uniformly_fast(runs, name, verdict):
    _, curve, _, _ = runs[name]
    uf = curve.uf_ratios(0.25)
    ok = verdict(6, name, bool(np.all(np.diff(uf) < 0)), f"T_sub/n^0.25 {np.round(uf, 4).tolist()}")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("name", list(SCENARIOS))
def test_criterion_7_determinism(runs, name, tmp_path, verdict):
    cfg, _, serial_path, _ = runs[name]
    parallel = experiment.run_experiment(cfg, workers=2)
    parallel_path = experiment.emit_csv(parallel, tmp_path / "parallel.csv")
    same = serial_path.read_bytes() == parallel_path.read_bytes()
    ok = verdict(7, name, same, f"serial vs 2 workers, {len(serial_path.read_bytes())} bytes")
    assert ok
