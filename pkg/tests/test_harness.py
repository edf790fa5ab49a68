import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from ucbscore.harness import config as cfgmod
from ucbscore.harness import experiment
from ucbscore.harness.config import ConfigError
from ucbscore.models.normal import NormalParams, m_chk

DATA = Path(__file__).parent / "data"
CONFIGS = Path(__file__).parent.parent / "configs"

CHK = {"family": "normal_chk", "arms": [{"mu": 0.5, "sigma": 1.0}, {"mu": 0.0, "sigma": 1.0}]}


def chk_config(**over):
    raw = {**CHK, "horizons": [100, 300, 1000], "replications": 2, "seed": 99, "output_path": "x.csv"}
    raw.update(over)
    return cfgmod.parse(raw)


class TestConfig:
    @pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
    def test_shipped_configs_load(self, path):
        cfg = cfgmod.load_config(path)
        assert cfg.horizons == (1000, 10_000, 100_000)
        assert cfg.replications == 2000
        optimal, target = experiment.targets(cfg)
        assert np.all(np.isfinite(target[~optimal])) and np.all(target[~optimal] > 0)

    def test_round_trip(self):
        for path in CONFIGS.glob("*.yaml"):
            cfg = cfgmod.load_config(path)
            assert cfgmod.parse(yaml.safe_load(yaml.safe_dump(cfgmod.to_dict(cfg)))) == cfg

    @pytest.mark.parametrize(
        "change, field",
        [
            ({"family": "gamma"}, "family"),
            ({"arms": [{"mu": 0.0, "sigma": 1.0}]}, "arms"),
            ({"horizons": [100, 100]}, "horizons"),
            ({"horizons": [3]}, "horizons"),
            ({"replications": 0}, "replications"),
            ({"replications": 2.5}, "replications"),
            ({"seed": -1}, "seed"),
            ({"workers": 0}, "workers"),
            ({"target_mode": "exact"}, "target_mode"),
            ({"arms": [{"mu": 0.0, "sigma": -1.0}, {"mu": 0.0, "sigma": 1.0}]}, "arms"),
            ({"arms": [{"mu": 0.0}, {"mu": 0.0, "sigma": 1.0}]}, r"arms\[0\]"),
            ({"arms": [{"mu": 0.0, "sigma": 1.0, "alpha": 2}, {"mu": 0.0, "sigma": 1.0}]}, r"arms\[0\]"),
            ({"arms": [{"mu": 0.0, "sigma": 1.0, "family": "pareto"}, {"mu": 0.0, "sigma": 1.0}]}, "family"),
            ({"arms": [{"mu": "a", "sigma": 1.0}, {"mu": 0.0, "sigma": 1.0}]}, r"arms\[0\].mu"),
            ({"kappa": 1.0}, "kappa"),
            ({"colour": "red"}, "colour"),
        ],
    )
    def test_rejections_name_the_field(self, change, field):
        with pytest.raises(ConfigError, match=field):
            chk_config(**change)

    def test_family_specific_errors(self):
        with pytest.raises(ConfigError, match="kappa"):
            cfgmod.parse({"family": "normal_thr", "arms": [{"mu": 0, "sigma_known": 1}, {"mu": 1, "sigma_known": 1}]})
        with pytest.raises(ConfigError, match="score"):
            cfgmod.parse({"family": "pareto", "score": "mode", "arms": [{"alpha": 2, "beta": 1}, {"alpha": 3, "beta": 1}]})
        with pytest.raises(ConfigError, match="d_schedule"):
            cfgmod.parse({"family": "coverage", "d_schedule": "cube",
                          "arms": [{"intervals": [[0, 0.5]]}, {"intervals": [[0, 0.2]]}]})
        with pytest.raises(ConfigError, match=r"arms\[0\].intervals"):
            cfgmod.parse({"family": "coverage", "arms": [{"intervals": [[0.5, 0.2]]}, {"intervals": [[0, 0.2]]}]})
        with pytest.raises(ConfigError, match="floor"):
            cfgmod.parse({"family": "pareto", "score": "mean", "arms": [{"alpha": 0.9, "beta": 1}, {"alpha": 3, "beta": 1}]})

    def test_arm_may_repeat_matching_shared_key(self):
        cfg = cfgmod.parse({"family": "pareto", "score": "mean",
                            "arms": [{"alpha": 2, "beta": 1, "score": "mean"}, {"alpha": 3, "beta": 1}]})
        assert cfg.shared["score"] == "mean"
        with pytest.raises(ConfigError, match="score"):
            cfgmod.parse({"family": "pareto", "score": "mean",
                          "arms": [{"alpha": 2, "beta": 1, "score": "median"}, {"alpha": 3, "beta": 1}]})

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            cfgmod.load_config(tmp_path / "missing.yaml")
        bad = tmp_path / "bad.yaml"
        bad.write_text("family: [unclosed\n")
        with pytest.raises(ConfigError, match="invalid YAML"):
            cfgmod.load_config(bad)

    def test_overrides_revalidate(self):
        cfg = chk_config()
        assert cfg.with_overrides(replications=5, seed=None).replications == 5
        with pytest.raises(ConfigError):
            cfg.with_overrides(replications=-1)


class TestFitSlope:
    def test_exact_line(self):
        x = np.log([10.0, 100.0, 1000.0, 1e4])
        slope, se = experiment.fit_slope(np.column_stack([x, 3.0 + 2.5 * x]))
        assert slope == pytest.approx(2.5, rel=1e-13) and se == pytest.approx(0.0, abs=1e-12)

    def test_noisy_line(self):
        rng = np.random.default_rng(0)
        x = np.log(np.geomspace(1e2, 1e6, 12))
        slope, se = experiment.fit_slope(np.column_stack([x, 5.0 * x + rng.normal(0, 0.1, x.size)]))
        assert abs(slope - 5.0) < 0.2 and 0 < se < 0.1

    def test_constant(self):
        slope, _ = experiment.fit_slope([(1.0, 4.0), (2.0, 4.0), (3.0, 4.0)])
        assert slope == 0.0

    @pytest.mark.parametrize("pts", [[(1, 2), (2, 3)], [(1, 2), (1, 3), (1, 4)]])
    def test_rejects(self, pts):
        with pytest.raises(ValueError):
            experiment.fit_slope(pts)


class TestTargets:
    def test_closed_form_matches_oracle(self):
        for path in sorted(CONFIGS.glob("*.yaml")):
            cfg = cfgmod.load_config(path)
            opt_c, closed = experiment.targets(cfg, "closed_form")
            opt_o, oracle = experiment.targets(cfg, "oracle")
            np.testing.assert_array_equal(opt_c, opt_o)
            m_closed, m_oracle = 1 / closed[~opt_c], 1 / oracle[~opt_o]
            np.testing.assert_allclose(m_closed, m_oracle, rtol=0, atol=1e-6)

    def test_chk_value(self):
        _, target = experiment.targets(chk_config())
        assert target[1] == pytest.approx(1 / m_chk(NormalParams(0.0, 1.0), 0.5), rel=1e-14)
        assert target[1] == pytest.approx(8.96284, abs=1e-5)

    def test_identical_arms_are_all_optimal(self):
        cfg = chk_config(arms=[{"mu": 0.0, "sigma": 1.0}, {"mu": 0.0, "sigma": 1.0}])
        curve = experiment.run_experiment(cfg)
        assert curve.is_optimal.all() and np.isnan(curve.slope).all()
        assert curve.suboptimal_mean.tolist() == [0.0, 0.0, 0.0]

    def test_tied_scores_with_different_m_are_optimal(self):
        cfg = cfgmod.parse({"family": "normal_var", "horizons": [100, 300, 1000], "replications": 1,
                            "arms": [{"mu": 0.0, "sigma": 1.0}, {"mu": 5.0, "sigma": 1.0}]})
        optimal, target = experiment.targets(cfg)
        assert optimal.all() and np.isnan(target).all()


class TestRun:
    def test_initial_phase_only(self):
        cfg = chk_config(horizons=[6], replications=1)
        curve = experiment.run_experiment(cfg)
        assert curve.mean_pulls.tolist() == [[3.0, 3.0]]
        assert np.isnan(curve.se_pulls).all()

    def test_conservation(self):
        cfg = cfgmod.load_config(CONFIGS / "interval.yaml").with_overrides(replications=4, horizons=(50, 500, 2000))
        pulls = experiment.run_pulls(cfg)
        assert pulls.shape == (4, 3, len(cfg.arms))
        assert (pulls.sum(axis=2) == np.array(cfg.horizons)).all()

    def test_deterministic(self):
        cfg = chk_config(replications=5)
        a, b = experiment.run_pulls(cfg), experiment.run_pulls(cfg)
        np.testing.assert_array_equal(a, b)

    def test_serial_and_parallel_identical(self, tmp_path):
        cfg = chk_config(replications=9)
        serial = experiment.emit_csv(experiment.run_experiment(cfg, workers=1), tmp_path / "serial.csv")
        parallel = experiment.emit_csv(experiment.run_experiment(cfg, workers=2), tmp_path / "parallel.csv")
        assert serial.read_bytes() == parallel.read_bytes()

    def test_python_route_matches_kernel(self):
        cfg = cfgmod.load_config(CONFIGS / "pareto_tail.yaml").with_overrides(replications=2, horizons=(100, 400, 1500))
        np.testing.assert_array_equal(experiment.run_pulls(cfg, use_kernel=False), experiment.run_pulls(cfg))

    def test_slope_horizons_drop_long_initial_phase(self):
        arms = [{"mu": 0.1 * k, "sigma": 1.0} for k in range(40)]
        cfg = chk_config(arms=arms, horizons=[1000, 3000, 10_000, 30_000])
        assert experiment.slope_horizons(cfg) == (3000, 10_000, 30_000)
        assert experiment.slope_horizons(chk_config()) == (100, 300, 1000)

    def test_uf_and_log_ratios(self):
        curve = experiment.run_experiment(chk_config())
        h = np.array([100.0, 300.0, 1000.0])
        np.testing.assert_allclose(curve.uf_ratios(), curve.mean_pulls[:, 1] / h**0.25)
        np.testing.assert_allclose(curve.log_ratios()[:, 1], curve.mean_pulls[:, 1] / np.log(h))


class TestCsv:
    def test_golden_file(self, tmp_path):
        cfg = chk_config()
        golden = (DATA / "golden_chk_2arm.csv").read_bytes()
        for use_kernel in (True, False):
            out = experiment.emit_csv(experiment.run_experiment(cfg, use_kernel=use_kernel), tmp_path / "run.csv")
            assert out.read_bytes() == golden

    def test_header_order_and_round_trip(self, tmp_path):
        curve = experiment.run_experiment(chk_config(replications=3))
        path = experiment.emit_csv(curve, tmp_path / "sub" / "out.csv")
        rows = experiment.read_csv(path)
        assert list(rows[0]) == experiment.CSV_HEADER
        keys = [(int(r["arm"]), int(r["horizon"])) for r in rows]
        assert keys == sorted(keys)
        for r in rows:
            i, k = int(r["arm"]), curve.horizons.index(int(r["horizon"]))
            # Nine significant digits bound the relative rounding error by 5e-9.
            assert float(r["mean_pulls"]) == pytest.approx(curve.mean_pulls[k, i], rel=5e-9)
            assert float(r["se_pulls"]) == pytest.approx(curve.se_pulls[k, i], rel=5e-9)
            if r["is_optimal"] == "1":
                assert r["target_inv_M"] == r["fitted_slope"] == ""
            else:
                assert float(r["target_inv_M"]) == pytest.approx(curve.target_inv_M[i], rel=5e-9)
                assert float(r["fitted_slope"]) == pytest.approx(curve.slope[i], rel=5e-9)

    def test_meta_sidecar(self, tmp_path):
        path = experiment.emit_csv(experiment.run_experiment(chk_config()), tmp_path / "out.csv")
        meta = json.loads(path.with_name("out.csv.meta.json").read_text())
        assert cfgmod.parse(meta["config"]) == chk_config()
        assert meta["n0"] == 3 and meta["slope_horizons"] == [100, 300, 1000]

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(OSError, match="cannot write"):
            experiment.emit_csv(experiment.run_experiment(chk_config()), blocker / "out.csv")

    def test_nine_significant_digits(self):
        assert experiment._fmt(1 / 3) == "0.333333333"
        assert experiment._fmt(True) == "1"
        assert experiment._fmt(np.int64(7)) == "7"
