import csv
import io
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from ucbscore.harness.cli import EXIT_FAILED, EXIT_INVALID, EXIT_OK, main

CONFIGS = Path(__file__).parent.parent / "configs"


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestIndexTable:
    def test_chk_example(self, capsys):
        assert main(["index-table", "--family", "normal_chk", "--params", "mu=0,sigma=1", "--n", "10", "--t", "4"]) == 0
        out = rows(capsys.readouterr().out)
        assert out == [{"family": "normal_chk", "t": "4", "n": "10", "index": "3"}]

    def test_grid_shape(self, capsys):
        code = main(["index-table", "--family", "pareto", "--params", "alpha=2,beta=1",
                     "--n", "1,10,100", "--t", "5,50"])
        assert code == EXIT_OK
        out = rows(capsys.readouterr().out)
        assert len(out) == 6
        assert float(out[0]["index"]) == pytest.approx(0.5)

    @pytest.mark.parametrize(
        "family, params",
        [
            ("coverage", "measure=0.5"),
            ("interval", "low=0,high=1"),
            ("normal_var", "sigma=2"),
            ("normal_thr", "mu=0,sigma_known=1,kappa=1"),
            ("pareto", "alpha=3,beta=1,score=mean"),
        ],
    )
    def test_every_family(self, family, params, capsys):
        assert main(["index-table", "--family", family, "--params", params, "--n", "1,1000", "--t", "20"]) == EXIT_OK
        values = [float(r["index"]) for r in rows(capsys.readouterr().out)]
        assert values[0] <= values[1]

    @pytest.mark.parametrize(
        "argv",
        [
            ["--family", "normal_chk", "--params", "mu=0", "--n", "10", "--t", "4"],
            ["--family", "normal_chk", "--params", "mu=0,sigma=1,rho=2", "--n", "10", "--t", "4"],
            ["--family", "normal_chk", "--params", "mu=0,sigma=1", "--n", "ten", "--t", "4"],
            ["--family", "normal_chk", "--params", "mu=0,sigma=1", "--n", "10", "--t", "2"],
            ["--family", "gamma", "--params", "mu=0", "--n", "10", "--t", "4"],
            ["--family", "coverage", "--params", "measure=1.5", "--n", "10", "--t", "40"],
        ],
    )
    def test_invalid_input(self, argv):
        assert main(["index-table", *argv]) == EXIT_INVALID


class TestVerifyBounds:
    @pytest.mark.parametrize("check", ["gamma", "chi2", "normal", "range", "estimators"])
    def test_passes(self, check, capsys):
        assert main(["verify-bounds", "--lemma", check, "--draws", "20000", "--seed", "0"]) == EXIT_OK
        out = rows(capsys.readouterr().out)
        assert out and all(r["result"] == "pass" for r in out)

    def test_bad_draws(self):
        assert main(["verify-bounds", "--lemma", "gamma", "--draws", "0"]) == EXIT_INVALID

    def test_failure_exit_code(self, monkeypatch, capsys):
        from ucbscore import diagnostics

        monkeypatch.setitem(diagnostics.BOUND_CHECKS, "gamma", lambda draws, seed: [diagnostics.BoundRow("x", 1.0, 0.5, False)])
        assert main(["verify-bounds", "--lemma", "gamma"]) == EXIT_FAILED


class TestOracleCheck:
    def test_single_family(self, capsys):
        assert main(["oracle-check", "--family", "normal_thr"]) == EXIT_OK
        out = rows(capsys.readouterr().out)
        assert out[0]["family"] == "normal_thr" and out[0]["result"] == "pass"

    def test_grid_failure_reported(self, capsys):
        assert main(["oracle-check", "--family", "normal_chk", "--grid-resolution", "2"]) == EXIT_FAILED
        assert "FAIL" in capsys.readouterr().out


class TestSimulate:
    def test_writes_csv(self, tmp_path, capsys):
        cfg = yaml.safe_load((CONFIGS / "normal_chk.yaml").read_text())
        cfg.update(horizons=[100, 300, 1000], replications=3)
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg))
        out = tmp_path / "res.csv"
        assert main(["simulate", "--config", str(path), "--out", str(out), "--seed", "5"]) == EXIT_OK
        assert out.exists() and (tmp_path / "res.csv.meta.json").exists()
        assert "arm 1: slope" in capsys.readouterr().out

    def test_missing_config(self, tmp_path, capsys):
        assert main(["simulate", "--config", str(tmp_path / "nope.yaml")]) == EXIT_INVALID
        assert "nope.yaml" in capsys.readouterr().err

    def test_bad_override(self):
        assert main(["simulate", "--config", str(CONFIGS / "normal_chk.yaml"), "--replications", "0"]) == EXIT_INVALID


def test_usage_errors():
    assert main([]) == EXIT_INVALID
    assert main(["--help"]) == EXIT_OK


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ucbscore", "index-table", "--family", "normal_chk",
                           "--params", "mu=0,sigma=1", "--n", "10", "--t", "4"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip().endswith(",3")
