import csv
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from pwfiber.cli import main as cli_main
from pwfiber.harness import (CSV_COLUMNS, ExperimentConfig, parse_config,
                             recipe, run_point, run_sweep)


def tiny_config(**overrides):
    """Cheap config: short frame, coarse oversampling, few steps."""
    base = dict(modulation=16, style="DUM", span_counts=(2,),
                oversampling=4, rrc_span_symbols=16, ssfm_steps_per_span=5,
                training_len=128, payload_len=896, power_dbm=(0.0,),
                seeds=(1,), detector="both", pw_radius=(0.3,))
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_text_round_trip(self):
        cfg = recipe("fig4")
        assert parse_config(cfg.to_text()) == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown key"):
            parse_config("modulation = 16\nbogus_key = 1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            parse_config("modulation = 16\nmodulation = 64\n")

    def test_bad_value_reported_with_line(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_config("modulation = 16\npower_dbm = banana\n")

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config("# a comment\n\nmodulation = 64\n"
                           "pw_radius = 0.15  # inline\n")
        assert cfg.modulation == 64
        assert cfg.pw_radius == (0.15,)

    def test_strict_validation(self):
        with pytest.raises(ValueError, match="style"):
            ExperimentConfig(style="DMM")
        with pytest.raises(ValueError, match="detector"):
            ExperimentConfig(detector="svm")
        with pytest.raises(ValueError, match="pw_radius"):
            ExperimentConfig(detector="pw", pw_radius=())
        with pytest.raises(ValueError, match="oversampling"):
            ExperimentConfig(oversampling=5)

    def test_training_len_defaults_by_modulation(self):
        assert ExperimentConfig(modulation=16).resolved_training_len == 1000
        assert ExperimentConfig(modulation=64,
                                pw_radius=(0.15,)).resolved_training_len == 2000
        assert ExperimentConfig(training_len=37).resolved_training_len == 37

    def test_fingerprint_tracks_config(self):
        a = tiny_config().fingerprint(2, 0.0, 1)
        b = tiny_config().fingerprint(2, 0.0, 2)
        c = tiny_config(gamma_per_w_km=1.5).fingerprint(2, 0.0, 1)
        assert a != b and a != c
        assert a == tiny_config().fingerprint(2, 0.0, 1)


class TestRecipes:
    def test_known_names(self):
        for name in ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8"):
            cfg = recipe(name)
            assert isinstance(cfg, ExperimentConfig)

    def test_fig6_is_dum_16qam_with_800km(self):
        cfg = recipe("fig6")
        assert cfg.style == "DUM"
        assert cfg.modulation == 16
        assert 10 in cfg.span_counts
        assert cfg.detector == "both"
        assert cfg.dbp_steps_per_span == 0

    def test_fig8_enables_dbp(self):
        cfg = recipe("fig8")
        assert cfg.style == "DUM"
        assert cfg.dbp_steps_per_span > 0

    def test_fig5_uses_64qam_training(self):
        cfg = recipe("fig5")
        assert cfg.modulation == 64
        assert cfg.resolved_training_len == 2000

    def test_unknown_name_lists_valid(self):
        with pytest.raises(ValueError, match="fig3.*fig8"):
            recipe("figX")


class TestRunPoint:
    def test_noiseless_back_to_back_flags_q(self):
        cfg = tiny_config(attenuation_db_km=0.0, gamma_per_w_km=0.0,
                          dispersion_ps_nm_km=0.0, amp_gain_db=0.0)
        rows = run_point(cfg, 2, 0.0, 1)
        assert len(rows) == 2  # md + one pw radius
        for row in rows:
            assert row.report.ber == 0.0
            assert math.isnan(row.report.q_db)

    def test_determinism(self):
        cfg = tiny_config()
        a = run_point(cfg, 2, 0.0, 1)
        b = run_point(cfg, 2, 0.0, 1)
        for ra, rb in zip(a, b):
            assert ra.report.bit_errors == rb.report.bit_errors
            assert ra.report.config_fingerprint == rb.report.config_fingerprint

    def test_one_row_per_detector_and_radius(self):
        cfg = tiny_config(pw_radius=(0.2, 0.3, 0.4))
        rows = run_point(cfg, 2, 0.0, 1)
        assert [r.detector for r in rows] == ["md", "pw", "pw", "pw"]
        assert [r.radius for r in rows] == [None, 0.2, 0.3, 0.4]


class TestRunSweep:
    def test_empty_power_axis_rejected(self):
        cfg = tiny_config()
        object.__setattr__(cfg, "power_dbm", ())
        with pytest.raises(ValueError, match="power"):
            run_sweep(cfg)

    def test_rows_sorted_canonically(self, tmp_path):
        cfg = tiny_config(power_dbm=(2.0, -2.0, 0.0), seeds=(2, 1))
        out = tmp_path / "table.csv"
        rows = run_sweep(cfg, out_path=str(out), fmt="csv")
        keys = [r.sort_key() for r in rows]
        assert keys == sorted(keys)
        with open(out) as fh:
            reader = csv.reader(fh)
            header = next(reader)
            assert tuple(header) == CSV_COLUMNS
            file_rows = list(reader)
        assert len(file_rows) == len(rows)
        powers = [float(r[4]) for r in file_rows]
        assert powers == sorted(powers)

    def test_parallel_matches_sequential(self, tmp_path):
        cfg = tiny_config(power_dbm=(0.0, 1.0), seeds=(1, 2))
        seq = run_sweep(cfg, jobs=1)
        par = run_sweep(cfg, jobs=2)
        assert [r.sort_key() for r in seq] == [r.sort_key() for r in par]
        assert [r.report.bit_errors for r in seq] == \
            [r.report.bit_errors for r in par]

    def test_point_failures_become_error_rows(self, tmp_path):
        # roll-off 0 with a short span fails tap energy capture at every point
        cfg = tiny_config(rrc_roll_off=0.0, power_dbm=(0.0, 1.0))
        rows = run_sweep(cfg, out_path=str(tmp_path / "t.csv"))
        assert len(rows) == 2
        assert all(r.detector == "error" for r in rows)
        assert all(r.report is None for r in rows)
        assert all("energy" in r.error for r in rows)

    def test_json_lines_output(self, tmp_path):
        cfg = tiny_config()
        out = tmp_path / "rows.json"
        rows = run_sweep(cfg, out_path=str(out), fmt="json")
        with open(out) as fh:
            parsed = [json.loads(line) for line in fh]
        assert len(parsed) == len(rows)
        assert parsed[0]["detector"] == "md"
        assert "fingerprint" in parsed[0]


class TestCli:
    def test_recipe_prints_config(self):
        runner = CliRunner()
        result = runner.invoke(cli_main, ["recipe", "fig4"])
        assert result.exit_code == 0
        assert "modulation = 16" in result.output

    def test_recipe_unknown_name(self):
        runner = CliRunner()
        result = runner.invoke(cli_main, ["recipe", "nope"])
        assert result.exit_code != 0
        assert "fig8" in result.output

    def test_run_writes_csv(self, tmp_path):
        cfg_path = tmp_path / "tiny.cfg"
        cfg_path.write_text(tiny_config().to_text())
        out = tmp_path / "out.csv"
        runner = CliRunner()
        result = runner.invoke(cli_main, ["run", str(cfg_path),
                                          "--out", str(out)])
        assert result.exit_code == 0, result.output
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert {r["detector"] for r in rows} == {"md", "pw"}

    def test_sweep_axis_override(self, tmp_path):
        cfg_path = tmp_path / "tiny.cfg"
        cfg_path.write_text(tiny_config().to_text())
        out = tmp_path / "out.csv"
        runner = CliRunner()
        result = runner.invoke(cli_main, [
            "sweep", str(cfg_path), "--power", "-1:1:1",
            "--seed", "5", "--out", str(out)])
        assert result.exit_code == 0, result.output
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert sorted({r["power_dbm"] for r in rows}) == ["-1", "0", "1"]
        assert {r["seed"] for r in rows} == {"5"}

    def test_regions_dump(self, tmp_path):
        cfg_path = tmp_path / "tiny.cfg"
        cfg_path.write_text(tiny_config().to_text())
        regions = tmp_path / "regions.csv"
        runner = CliRunner()
        result = runner.invoke(cli_main, [
            "run", str(cfg_path), "--out", str(tmp_path / "o.csv"),
            "--regions", str(regions)])
        assert result.exit_code == 0, result.output
        with open(regions) as fh:
            rows = list(csv.DictReader(fh))
        assert set(rows[0].keys()) == {"re", "im", "label"}
        assert len(rows) == 201 * 201
