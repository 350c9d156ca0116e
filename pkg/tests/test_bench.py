"""Unit tests for the experiment runner, spectrum reports, and CLI."""

import json

import numpy as np
import pytest

from singcov import bench, cli
from singcov.linalg import load_matrix_csv, save_matrix_csv
from singcov.ewens import ewens_estimator
from conftest import random_psd

BASE = {
    "m": 8,
    "n": 6,
    "truth": {"kind": "tridiagonal", "b": 0.3},
    "estimators": ["truth", "sample", "loading", "covp", "ewens", "hybrid"],
    "theta_grid": [1.0, 6.0],
    "p_grid": [3],
    "loading_grid": [[1.0, 0.0], [0.8, 0.2]],
    "mc_samples": 200,
    "seed": 5,
    "trials": 3,
}


def make_config(**overrides):
    doc = json.loads(json.dumps(BASE))
    doc.update(overrides)
    return bench.ExperimentConfig.from_dict(doc)


class TestConfig:
    def test_roundtrip(self):
        config = make_config()
        again = bench.ExperimentConfig.from_dict(config.to_dict())
        assert again == config

    def test_rejects_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            make_config(extra=1)

    def test_rejects_unknown_truth_keys(self):
        with pytest.raises(ValueError, match="unknown truth keys"):
            make_config(truth={"kind": "tridiagonal", "b": 0.3, "c": 1})

    def test_rejects_unknown_estimator(self):
        with pytest.raises(ValueError, match="unknown estimator"):
            make_config(estimators=["sample", "magic"])

    def test_requires_grids(self):
        with pytest.raises(ValueError, match="theta_grid"):
            make_config(estimators=["ewens"], theta_grid=[])
        with pytest.raises(ValueError, match="p_grid"):
            make_config(estimators=["covp"], p_grid=[])
        with pytest.raises(ValueError, match="loading_grid"):
            make_config(estimators=["loading"], loading_grid=[])

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            make_config(theta_grid=[0.0])
        with pytest.raises(ValueError):
            make_config(p_grid=[9])
        with pytest.raises(ValueError):
            make_config(truth={"kind": "power"})

    def test_from_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(BASE))
        assert bench.ExperimentConfig.from_json(path) == make_config()
        path.write_text("{not json")
        with pytest.raises(ValueError, match="not valid JSON"):
            bench.ExperimentConfig.from_json(path)


class TestRunExperiment:
    def test_truth_rows_are_zero(self):
        report = bench.run_experiment(make_config())
        row = report.row("truth", "", "fro_direct")
        assert row.values == [0.0, 0.0, 0.0]

    def test_loading_never_beats_its_identity_point(self):
        # the grid contains (1, 0), so the oracle minimum is at most
        # the plain sample error in every trial
        report = bench.run_experiment(make_config())
        sample = report.row("sample", "", "fro_direct")
        loading = report.row("loading", "grid-min", "fro_direct")
        for s, l in zip(sample.values, loading.values):
            assert l <= s + 1e-12

    def test_deterministic_across_threads(self):
        config = make_config(
            estimators=["sample", "invcovp", "hybrid_inverse"],
            theta_grid=[2.0],
            p_grid=[3],
        )
        one = bench.run_experiment(config, threads=1)
        two = bench.run_experiment(config, threads=3)
        for a, b in zip(one.rows, two.rows):
            assert a.values == b.values

    def test_invalid_rows_marked_not_fatal(self):
        config = make_config(
            n=3, estimators=["sample", "invcovp"], p_grid=[5], mc_samples=100
        )
        report = bench.run_experiment(config)
        bad = report.row("invcovp", "p=5", "fro_direct")
        assert not bad.valid
        assert "rank" in bad.reason
        assert report.row("sample", "", "fro_direct").valid

    def test_write_outputs(self, tmp_path):
        report = bench.run_experiment(make_config(trials=2))
        raw, agg, cfg = report.write(tmp_path / "out")
        lines = open(raw).read().splitlines()
        assert lines[0] == "estimator,parameter,metric,trial,value"
        assert open(agg).readline().startswith("estimator,parameter,metric,trials")
        assert json.load(open(cfg))["m"] == 8


class TestSpectrumReport:
    def test_files_exist_and_parse(self, tmp_path):
        config = make_config(estimators=["sample", "ewens"], theta_grid=[2.0, 8.0])
        paths = bench.spectrum_report(config, tmp_path / "spec")
        names = {p.split("/")[-1] for p in map(str, paths)}
        assert "esd_truth.csv" in names
        assert "esd_sample.csv" in names
        assert "density_truth.csv" in names
        assert "esd_ewens_theta_2.csv" in names
        assert "density_ewens_beta_1.csv" in names
        for path in paths:
            rows = open(path).read().strip().splitlines()
            assert len(rows) >= 2


class TestVerify:
    def test_unknown_suite(self):
        with pytest.raises(KeyError):
            bench.verify("bogus")

    def test_block_pinv_suite_passes(self):
        report = bench.verify("block-pinv")
        assert report.passed
        doc = report.to_dict()
        assert doc["suite"] == "block-pinv"
        assert all(c["value"] <= c["tol"] for c in doc["checks"])

    def test_toeplitz_decomp_suite_passes(self):
        assert bench.verify("toeplitz-decomp").passed


class TestCli:
    def test_estimate_matches_library(self, tmp_path):
        k = random_psd(5, 5, 123)
        src = tmp_path / "k.csv"
        dst = tmp_path / "est.csv"
        save_matrix_csv(src, k)
        code = cli.main(
            ["estimate", "--estimator", "ewens", "--input", str(src),
             "--theta", "2.5", "--out", str(dst)]
        )
        assert code == 0
        np.testing.assert_allclose(
            load_matrix_csv(dst), ewens_estimator(k, 2.5), atol=1e-15
        )

    def test_estimate_missing_parameter(self, tmp_path, capsys):
        k = random_psd(4, 4, 124)
        src = tmp_path / "k.csv"
        save_matrix_csv(src, k)
        code = cli.main(
            ["estimate", "--estimator", "ewens", "--input", str(src),
             "--out", str(tmp_path / "o.csv")]
        )
        assert code == 1
        assert "theta" in capsys.readouterr().err

    def test_experiment_rerun_byte_identical(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        doc = dict(BASE, estimators=["sample", "invcovp"], p_grid=[3], trials=2)
        cfg.write_text(json.dumps(doc))
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert cli.main(["experiment", "--config", str(cfg), "--out", str(a)]) == 0
        assert cli.main(["experiment", "--config", str(cfg), "--out", str(b)]) == 0
        for name in ("metrics_raw.csv", "metrics_mean.csv", "config.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_experiment_bad_config_exit_one(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(dict(BASE, mystery=1)))
        code = cli.main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "x")])
        assert code == 1
        assert "unknown config keys" in capsys.readouterr().err

    def test_spectrum_seed_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(dict(BASE, estimators=["sample"], theta_grid=[])))
        out = tmp_path / "s"
        code = cli.main(
            ["spectrum", "--config", str(cfg), "--out", str(out), "--seed", "99"]
        )
        assert code == 0
        assert (out / "esd_sample.csv").exists()

    def test_verify_exit_codes(self, tmp_path, capsys, monkeypatch):
        assert cli.main(["verify", "block-pinv"]) == 0
        assert "PASS" in capsys.readouterr().out
        assert cli.main(["verify", "nonexistent"]) == 1
        capsys.readouterr()
        monkeypatch.setitem(
            bench.VERIFY_SUITES,
            "always-red",
            lambda: [bench.VerifyCheck("forced failure", 1.0, 0.5)],
        )
        report_path = tmp_path / "report.json"
        code = cli.main(["verify", "always-red", "--out", str(report_path)])
        assert code == 2
        assert "FAIL" in capsys.readouterr().out
        assert json.load(open(report_path))["passed"] is False

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
