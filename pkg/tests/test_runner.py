"""Synthetic data generation and experiment orchestration."""

import dataclasses
import json

import numpy as np
import pytest

from ecp.dataset import read_report
from ecp.runner import ExperimentConfig, run_experiment, synth


def accuracy(ds):
    return float((ds.logits.argmax(axis=1) == ds.labels).mean())


class TestSynth:
    def test_zero_separation_is_chance_level(self):
        ds = synth(10, 40_000, 0.0, seed=0)
        assert abs(accuracy(ds) - 0.1) < 0.01

    def test_large_separation_is_nearly_perfect(self):
        ds = synth(10, 20_000, 12.0, seed=1)
        assert accuracy(ds) > 0.99

    def test_deterministic(self):
        a = synth(7, 500, 2.0, seed=42)
        b = synth(7, 500, 2.0, seed=42)
        np.testing.assert_array_equal(a.logits, b.logits)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_seeds_differ(self):
        a = synth(7, 500, 2.0, seed=1)
        b = synth(7, 500, 2.0, seed=2)
        assert not np.array_equal(a.logits, b.logits)

    def test_validation(self):
        with pytest.raises(ValueError):
            synth(1, 100, 2.0)
        with pytest.raises(ValueError):
            synth(10, 5, 2.0)


class TestExperimentConfig:
    def test_defaults_valid(self):
        ExperimentConfig()

    def test_trials_positive(self):
        with pytest.raises(ValueError):
            ExperimentConfig(trials=0)

    def test_delta_range(self):
        with pytest.raises(ValueError):
            ExperimentConfig(deltas=(0.0,))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            ExperimentConfig(methods=("ecp", "oracle"))

    def test_from_file_with_overrides(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"trials": 3, "deltas": [0.2], "seed": 5}))
        config = ExperimentConfig.from_file(path, trials=7, out_dir=str(tmp_path))
        assert config.trials == 7 and config.deltas == (0.2,) and config.seed == 5


@pytest.fixture(scope="module")
def dataset():
    return synth(6, 1500, 2.2, seed=3, sharpness=1.5)


class TestRunExperiment:
    def make_config(self, tmp_path, **kw):
        defaults = dict(
            methods=("ecp", "base", "aps", "raps", "las"),
            deltas=(0.1,),
            trials=3,
            calibration_fraction=0.3,
            seed=9,
            out_dir=str(tmp_path / "reports"),
        )
        defaults.update(kw)
        return ExperimentConfig(**defaults)

    def test_emits_all_report_files(self, dataset, tmp_path):
        paths = run_experiment(self.make_config(tmp_path), dataset)
        for name in ("per_trial", "summary", "size_strat", "difficulty_strat", "sat"):
            assert paths[name].exists(), name
        assert paths["reliability"].exists()
        per_trial = read_report(paths["per_trial"])
        assert len(per_trial) == 5 * 3  # methods x trials
        reliability = json.loads(paths["reliability"].read_text())
        assert len(reliability) == 4 * 3  # base emits no calibration record
        assert all("gamma" in r and "u_c" in r for r in reliability)

    def test_reruns_are_byte_identical(self, dataset, tmp_path):
        p1 = run_experiment(self.make_config(tmp_path / "a"), dataset)
        p2 = run_experiment(self.make_config(tmp_path / "b"), dataset)
        for name in p1:
            assert p1[name].read_bytes() == p2[name].read_bytes(), name

    def test_parallel_matches_serial(self, dataset, tmp_path):
        serial = run_experiment(self.make_config(tmp_path / "s", workers=1), dataset)
        threaded = run_experiment(self.make_config(tmp_path / "t", workers=4), dataset)
        for name in serial:
            assert serial[name].read_bytes() == threaded[name].read_bytes(), name

    def test_raps_zero_lambda_matches_aps_rows(self, dataset, tmp_path):
        config = self.make_config(tmp_path, methods=("aps", "raps"), lam=0.0)
        paths = run_experiment(config, dataset)
        rows = read_report(paths["per_trial"])
        aps = {r["trial"]: r for r in rows if r["method"] == "aps"}
        raps = {r["trial"]: r for r in rows if r["method"] == "raps"}
        for trial, row in aps.items():
            twin = raps[trial]
            for key in ("coverage", "mean_size", "sscv", "sat", "q_hat"):
                assert row[key] == twin[key], key

    def test_loads_dataset_from_files(self, dataset, tmp_path):
        from ecp.dataset import save_logits

        save_logits(dataset, tmp_path / "z.bin", tmp_path / "y.bin")
        config = self.make_config(
            tmp_path,
            logits_path=str(tmp_path / "z.bin"),
            labels_path=str(tmp_path / "y.bin"),
            trials=1,
            methods=("ecp",),
        )
        paths = run_experiment(config)
        assert read_report(paths["summary"])[0]["method"] == "ecp"

    def test_summary_is_median_of_means(self, dataset, tmp_path):
        config = self.make_config(tmp_path, methods=("ecp",), trials=3)
        paths = run_experiment(config, dataset)
        rows = read_report(paths["per_trial"])
        summary = read_report(paths["summary"])[0]
        assert summary["coverage"] == float(np.median([r["coverage"] for r in rows]))
        assert summary["mean_size"] == float(np.median([r["mean_size"] for r in rows]))

    def test_ten_trial_summary_hits_nominal_coverage(self, tmp_path):
        ds = synth(10, 4_000, 2.5, seed=29, sharpness=2.0)
        config = self.make_config(tmp_path, methods=("ecp",), trials=10, seed=29)
        paths = run_experiment(config, ds)
        summary = read_report(paths["summary"])[0]
        assert abs(summary["coverage"] - 0.90) < 0.03
        reliability = json.loads(paths["reliability"].read_text())
        assert all(abs(r["gamma"] - 0.9) < 0.01 for r in reliability)
