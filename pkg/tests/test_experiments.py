"""Experiment harness tests: CSV outputs, determinism, summaries, CLI."""

import os

import numpy as np
import pytest

import iabsim.experiments as experiments
from iabsim.cli import main
from iabsim.config import ScenarioConfig, load_config
from iabsim.experiments import (ExperimentSpec, crossing_point, read_csv,
                                run_experiment, summarize)


def tiny_config(**kw):
    base = dict(num_ues=3, num_cells=1, trials=2, seed=5,
                ga_iterations=5, ga_population=6, ga_neighborhood=2,
                sweep_ues=(0, 3), sweep_backoff_db=(0.0, 40.0),
                powercdf_rates_bps=(64e3,), trace_seeds=2,
                min_rate_bps=1e6, rb_max=16)
    base.update(kw)
    return ScenarioConfig(**base)


def run(tmp_path, name, config, **spec_kw):
    out = str(tmp_path / f"{name}.csv")
    spec = ExperimentSpec(name=name, out=out, **spec_kw)
    return run_experiment(spec, config)


class TestGaTrace:
    def test_rows_and_monotone_columns(self, tmp_path):
        paths = run(tmp_path, "ga-trace", tiny_config())
        _, _, columns, data, _ = read_csv(paths[0])
        assert columns[0] == "iteration"
        assert len(columns) == 3  # two seeds
        assert data.shape[0] == 5
        for j in range(1, 3):
            assert np.all(np.diff(data[:, j]) >= 0)


class TestCoverageVsUes:
    def test_columns_and_vacuous_row(self, tmp_path):
        paths = run(tmp_path, "coverage-vs-ues", tiny_config(),
                    rbs_values=(2,))
        assert len(paths) == 1
        _, _, columns, data, _ = read_csv(paths[0])
        assert columns == ["num_ues", "coverage_optimized",
                           "coverage_max_power", "coverage_random_power"]
        zero_row = data[data[:, 0] == 0][0]
        assert tuple(zero_row[1:]) == (1.0, 1.0, 1.0)

    def test_two_rb_variants(self, tmp_path):
        paths = run(tmp_path, "coverage-vs-ues", tiny_config())
        assert len(paths) == 2
        assert paths[0].endswith("_rb2.csv")
        assert paths[1].endswith("_rb4.csv")


class TestCoverageVsSinr:
    def test_columns_and_mode_ordering(self, tmp_path):
        cfg = tiny_config(num_ues=6, num_cells=2, power_policy="max",
                          trials=3)
        paths = run(tmp_path, "coverage-vs-sinr", cfg)
        _, _, columns, data, _ = read_csv(paths[0])
        assert columns == ["backoff_db", "sep_median_sinr_db", "sep_coverage",
                           "sim_median_sinr_db", "sim_coverage"]
        sep = data[:, columns.index("sep_coverage")]
        sim = data[:, columns.index("sim_coverage")]
        assert np.all(sep >= sim)  # same powers, superset interferers


class TestIntercell:
    def test_columns(self, tmp_path):
        paths = run(tmp_path, "intercell", tiny_config(power_policy="max"))
        _, _, columns, data, _ = read_csv(paths[0])
        assert columns == ["num_ues", "coverage_1cell", "coverage_2cell"]
        assert np.all((data[:, 1:] >= 0) & (data[:, 1:] <= 1))


class TestPowerCdf:
    def test_rows_within_role_bounds(self, tmp_path):
        paths = run(tmp_path, "power-cdf", tiny_config())
        _, _, columns, data, raw = read_csv(paths[0])
        role_col = columns.index("role")
        eirp_col = columns.index("eirp_dbm")
        server_col = columns.index("server_role")
        assert raw, "expected data rows"
        for row in raw:
            eirp = float(row[eirp_col])
            if row[role_col] == "ue":
                assert 23.0 <= eirp <= 43.0
                assert row[server_col] in ("donor", "iab")
            else:
                assert 35.0 <= eirp <= 53.0


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        cfg = tiny_config()
        a = run(tmp_path, "ga-trace", cfg)[0]
        data_a = open(a, "rb").read()
        b_out = str(tmp_path / "again.csv")
        run_experiment(ExperimentSpec("ga-trace", b_out), cfg)
        assert open(b_out, "rb").read() == data_a

    def test_header_reproduces_file(self, tmp_path):
        cfg = tiny_config(num_ues=4, power_policy="max")
        first = run(tmp_path, "intercell", cfg)[0]
        header_lines = []
        with open(first) as fh:
            for line in fh:
                if not line.startswith("#"):
                    break
                body = line[1:].strip()
                if "=" in body and not body.startswith("experiment"):
                    header_lines.append(body)
        cfg_file = tmp_path / "from_header.cfg"
        cfg_file.write_text("\n".join(header_lines) + "\n")
        reloaded = load_config(str(cfg_file))
        second = str(tmp_path / "reproduced.csv")
        run_experiment(ExperimentSpec("intercell", second), reloaded)
        assert open(second, "rb").read() == open(first, "rb").read()

    def test_workers_do_not_change_bytes(self, tmp_path):
        cfg = tiny_config(num_ues=5, num_cells=2, trials=4,
                          power_policy="max")
        serial = str(tmp_path / "serial.csv")
        parallel = str(tmp_path / "parallel.csv")
        run_experiment(ExperimentSpec("coverage-vs-sinr", serial), cfg,
                       workers=1)
        run_experiment(ExperimentSpec("coverage-vs-sinr", parallel), cfg,
                       workers=4)
        assert open(serial, "rb").read() == open(parallel, "rb").read()


class TestFailureCleanup:
    def test_partial_outputs_removed(self, tmp_path, monkeypatch):
        cfg = tiny_config()
        calls = {"n": 0}
        real = experiments._mean_coverage

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] > len(cfg.sweep_ues) * 3:  # first file complete
                raise RuntimeError("injected failure")
            return real(*args, **kwargs)

        monkeypatch.setattr(experiments, "_mean_coverage", flaky)
        out = str(tmp_path / "cov.csv")
        with pytest.raises(RuntimeError):
            run_experiment(ExperimentSpec("coverage-vs-ues", out), cfg)
        assert not list(tmp_path.iterdir())


class TestSummarize:
    def _fixture(self, tmp_path, rows):
        path = str(tmp_path / "fix.csv")
        experiments._write_csv(path, tiny_config(), "coverage-vs-ues",
                               ["num_ues", "coverage_optimized",
                                "coverage_max_power",
                                "coverage_random_power"], rows)
        return path

    def test_crossing_interpolation(self):
        x = np.array([10.0, 20.0, 30.0])
        assert crossing_point(x, np.array([0.9, 0.8, 0.6]), 0.7) == \
            pytest.approx(25.0)
        assert crossing_point(x, np.array([0.9, 0.8, 0.75]), 0.7) is None
        assert crossing_point(x, np.array([0.5, 0.4, 0.3]), 0.7) == 10.0

    def test_dominant_optimized_reports_gain(self, tmp_path):
        rows = [[10, 0.95, 0.70, 0.65], [20, 0.80, 0.50, 0.45],
                [30, 0.60, 0.30, 0.25]]
        report = summarize(self._fixture(tmp_path, rows))
        assert "positive gain at 70%" in report

    def test_identical_cell_columns_zero_delta(self, tmp_path):
        path = str(tmp_path / "ic.csv")
        experiments._write_csv(path, tiny_config(), "intercell",
                               ["num_ues", "coverage_1cell", "coverage_2cell"],
                               [[5, 0.9, 0.9], [10, 0.8, 0.8]])
        report = summarize(path)
        assert "0.0000" in report

    def test_malformed_csv_rejected(self, tmp_path):
        path = tmp_path / "junk.csv"
        path.write_text("# not an experiment\n")
        with pytest.raises(Exception):
            summarize(str(path))


class TestCli:
    def test_run_and_summarize_roundtrip(self, tmp_path, capsys):
        out = str(tmp_path / "trace.csv")
        code = main(["run", "ga-trace", "--trials", "1", "--ues", "2",
                     "--seed", "3", "--out", out])
        assert code == 0
        assert os.path.exists(out)
        assert main(["summarize", out]) == 0
        captured = capsys.readouterr()
        assert "ga-trace" in captured.out

    def test_cli_overrides_applied(self, tmp_path):
        out = str(tmp_path / "t.csv")
        code = main(["run", "ga-trace", "--ues", "2", "--seed", "11",
                     "--trials", "1", "--cells", "2", "--policy", "max",
                     "--slot-mode", "simultaneous", "--out", out])
        assert code == 0
        _, header, _, _, _ = read_csv(out)
        assert header["num_ues"] == "2"
        assert header["num_cells"] == "2"
        assert header["slot_mode"] == "simultaneous"
        assert header["power_policy"] == "max"

    def test_validation_error_exit_code(self, tmp_path, capsys):
        out = str(tmp_path / "x.csv")
        code = main(["run", "ga-trace", "--cells", "2", "--ues", "-3",
                     "--out", out])
        assert code == 1
        assert "num_ues" in capsys.readouterr().err

    def test_missing_config_file_exit_code(self, tmp_path):
        out = str(tmp_path / "x.csv")
        code = main(["run", "ga-trace", "--config", "/nonexistent.cfg",
                     "--out", out])
        assert code == 1

    def test_runtime_error_exit_code(self, tmp_path, monkeypatch):
        import iabsim.cli as cli

        def boom(*args, **kwargs):
            raise RuntimeError("boom")

        monkeypatch.setattr(cli, "run_experiment", boom)
        code = main(["run", "ga-trace", "--out", str(tmp_path / "x.csv")])
        assert code == 2
