import json
import math
from pathlib import Path

import numpy as np
import pytest

from rsbeam import cli
from rsbeam.experiments import (
    RESULT_COLUMNS,
    ExperimentConfig,
    ResultRow,
    emit_convergence_trace,
    load_config,
    run_sweep,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _mini_config(**overrides) -> ExperimentConfig:
    base = dict(
        name="mini", scenario="specific", n_users=2, n_antennas=2, gamma=1.0,
        thetas=(2 * math.pi / 9,), weights=(0.5, 0.5), schemes=("rs",),
        csit_modes=("perfect",), snr_db=(20.0,), thresholds=(0.1,),
        trials=1, master_seed=7, out_dir="unused")
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfigParsing:
    def test_angle_expressions(self):
        from rsbeam.experiments import _parse_angle
        assert _parse_angle("2pi/9") == pytest.approx(2 * math.pi / 9)
        assert _parse_angle("pi/4") == pytest.approx(math.pi / 4)
        assert _parse_angle("pi") == pytest.approx(math.pi)
        assert _parse_angle("0.75") == pytest.approx(0.75)
        assert _parse_angle("3*pi/9") == pytest.approx(math.pi / 3)

    def test_load_shipped_configs(self):
        for name in ("specific_2x2_threshold_sweep.ini", "specific_2x2_ci.ini", "specific_4ant_strength_gap.ini", "random_2user.ini",
                     "random_3user.ini", "trace_kappa.ini"):
            config = load_config(CONFIGS / name)
            config.validate()
        specific_2x2_threshold_sweep = load_config(CONFIGS / "specific_2x2_threshold_sweep.ini")
        assert specific_2x2_threshold_sweep.scenario == "specific"
        assert len(specific_2x2_threshold_sweep.thetas) == 4
        assert specific_2x2_threshold_sweep.thetas[1] == pytest.approx(2 * math.pi / 9)
        assert specific_2x2_threshold_sweep.csit_quality == pytest.approx(1.0)  # match_gamma
        assert specific_2x2_threshold_sweep.schemes == ("rs", "mulp")
        random_3user = load_config(CONFIGS / "random_3user.ini")
        assert random_3user.weights == (0.2, 0.3, 0.5)
        assert random_3user.n_users == 3

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_config(CONFIGS / "does_not_exist.ini")

    def test_validation_errors(self):
        with pytest.raises(ValueError):
            _mini_config(scenario="bogus").validate()
        with pytest.raises(ValueError):
            _mini_config(weights=(1.0,)).validate()
        with pytest.raises(ValueError):
            _mini_config(schemes=("zf",)).validate()


class TestRunSweep:
    def test_specific_rows_and_manifest(self, tmp_path):
        config = _mini_config(schemes=("rs", "mulp"))
        rows = run_sweep(config, out_dir=tmp_path)
        assert len(rows) == 2
        for row in rows:
            row.check()
            assert row.converged
        results = (tmp_path / "mini_results.csv").read_text().splitlines()
        assert results[0] == ",".join(RESULT_COLUMNS)
        assert len(results) == 3
        manifest = json.loads((tmp_path / "mini_manifest.json").read_text())
        assert manifest["master_seed"] == 7
        assert "imperfect_csit_estimate" in manifest["conventions"]
        assert (tmp_path / "mini_timing.csv").exists()

    def test_random_scenario_mean_rows(self, tmp_path):
        config = _mini_config(scenario="random", trials=3, thresholds=(0.0,))
        rows = run_sweep(config, out_dir=tmp_path)
        assert len(rows) == 4  # 3 trials + 1 mean
        assert rows[-1].trial == "mean"
        wsr_mean = np.mean([r.wsr for r in rows[:3]])
        assert rows[-1].wsr == pytest.approx(wsr_mean)

    def test_reproducible_tables(self, tmp_path):
        config = _mini_config(scenario="random", trials=2,
                              csit_modes=("perfect", "imperfect"), n_samples=20)
        run_sweep(config, out_dir=tmp_path / "a")
        run_sweep(config, out_dir=tmp_path / "b")
        a = (tmp_path / "a" / "mini_results.csv").read_bytes()
        b = (tmp_path / "b" / "mini_results.csv").read_bytes()
        assert a == b

    def test_jobs_parallel_matches_serial(self, tmp_path):
        config = _mini_config(scenario="random", trials=2, schemes=("rs",))
        run_sweep(config, out_dir=tmp_path / "serial", jobs=1)
        run_sweep(config, out_dir=tmp_path / "par", jobs=2)
        a = (tmp_path / "serial" / "mini_results.csv").read_bytes()
        b = (tmp_path / "par" / "mini_results.csv").read_bytes()
        assert a == b

    def test_infeasible_cell_recorded_not_raised(self, tmp_path):
        config = _mini_config(thresholds=(25.0,))  # far above capacity
        rows = run_sweep(config, out_dir=tmp_path)
        assert len(rows) == 1
        assert rows[0].error == "InfeasibleThresholds"
        assert not rows[0].feasible


class TestTraces:
    def test_trace_records(self, tmp_path):
        config = _mini_config(kappa_values=(0.5,), thresholds=(0.5,))
        path = emit_convergence_trace(config, out_dir=tmp_path)
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert records
        assert records[0]["iteration"] == 0
        objectives = [r["objective"] for r in records]
        assert np.all(np.diff(objectives) >= -1e-7)  # ascending WSR trace
        assert "final_wsr" in records[-1]

    def test_kappa_sweep_trace_groups(self, tmp_path):
        config = _mini_config(kappa_values=(0.1, 0.5, 0.8), thresholds=(0.5,),
                              csit_modes=("imperfect",), n_samples=10)
        path = emit_convergence_trace(config, out_dir=tmp_path)
        records = [json.loads(line) for line in path.read_text().splitlines()]
        kappas = {r["kappa"] for r in records}
        assert kappas == {0.1, 0.5, 0.8}
        for kappa in kappas:
            group = [r["objective"] for r in records if r["kappa"] == kappa]
            assert np.all(np.diff(group) <= 1e-7)  # descending WMSE objective


class TestCli:
    def test_validate_passes(self, capsys):
        assert cli.main(["validate"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out

    def test_sweep_subcommand(self, tmp_path, capsys):
        config_path = tmp_path / "mini.ini"
        config_path.write_text(
            "[scenario]\nkind = specific\nusers = 2\nantennas = 2\n"
            "gamma = 1.0\ntheta = 2pi/9\nweights = 0.5, 0.5\n"
            "[algorithm]\nschemes = rs\ncsit = perfect\n"
            "[sweep]\nsnr_db = 20\nsecrecy_thresholds = 0.1\nmaster_seed = 3\n"
            "[output]\ndirectory = unused\nprefix = mini\n")
        code = cli.main(["sweep", str(config_path), "--out-dir", str(tmp_path / "out")])
        assert code == 0
        assert (tmp_path / "out" / "mini_results.csv").exists()
        manifest = json.loads((tmp_path / "out" / "mini_manifest.json").read_text())
        assert manifest["config_sha256"]

    def test_seed_override_changes_manifest(self, tmp_path):
        config_path = tmp_path / "mini.ini"
        config_path.write_text(
            "[scenario]\nkind = specific\nusers = 2\nantennas = 2\n"
            "gamma = 1.0\ntheta = 2pi/9\nweights = 0.5, 0.5\n"
            "[algorithm]\nschemes = rs\ncsit = perfect\n"
            "[sweep]\nsnr_db = 20\nsecrecy_thresholds = 0.1\nmaster_seed = 3\n"
            "[output]\ndirectory = unused\nprefix = mini\n")
        cli.main(["sweep", str(config_path), "--out-dir", str(tmp_path / "out"),
                  "--seed", "99"])
        manifest = json.loads((tmp_path / "out" / "mini_manifest.json").read_text())
        assert manifest["master_seed"] == 99
