import json

import numpy as np
import pytest

from snswf import load_csv
from snswf.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run_cli("simulate", "--out", out) == 0
    return out


class TestSimulateCommand:
    def test_default_simulation_layout(self, sim_dir):
        record = load_csv(sim_dir / "record.csv")
        assert record.n_channels == 9
        assert record.n_samples == 2400
        assert abs(record.sample_rate_hz - 20.0) < 1e-9
        truth = json.loads((sim_dir / "truth.json").read_text())
        assert truth["f_signal_cpm"] == 3.0
        assert truth["f_noise_cpm"] == 0.3
        assert truth["seed"] == 0
        assert truth["schema_version"] == 1

    def test_zero_duration_is_config_error(self, tmp_path):
        assert run_cli("simulate", "--out", tmp_path / "x", "--duration-s", "0") == 2

    def test_same_seed_same_bytes(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert run_cli("simulate", "--out", a, "--seed", "7") == 0
        assert run_cli("simulate", "--out", b, "--seed", "7") == 0
        assert (a / "record.csv").read_bytes() == (b / "record.csv").read_bytes()
        assert (a / "truth.json").read_bytes() == (b / "truth.json").read_bytes()

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("duration_s=60\nseed=3\n")
        out = tmp_path / "out"
        assert run_cli("simulate", "--out", out, "--config", cfg, "--seed", "9") == 0
        truth = json.loads((out / "truth.json").read_text())
        assert truth["duration_s"] == 60.0
        assert truth["seed"] == 9

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("not_a_key=1\n")
        assert run_cli("simulate", "--out", tmp_path / "x", "--config", cfg) == 2


class TestSobiCommand:
    def test_outputs_written(self, sim_dir, tmp_path):
        out = tmp_path / "sep"
        assert run_cli("sobi", sim_dir / "record.csv", "--out", out) == 0
        sources = load_csv(out / "sources.csv")
        assert sources.n_channels == 9
        mixing = np.loadtxt(out / "mixing.csv", delimiter=",")
        unmixing = np.loadtxt(out / "unmixing.csv", delimiter=",")
        assert mixing.shape == (9, 9)
        assert unmixing.shape == (9, 9)
        meta = json.loads((out / "sobi.json").read_text())
        assert meta["n_sources"] == 9
        assert len(meta["lags_s"]) == 10
        assert meta["lags_s"][-1] == pytest.approx(1.0)

    def test_lag_flags_respected(self, sim_dir, tmp_path):
        out = tmp_path / "sep"
        assert run_cli(
            "sobi", sim_dir / "record.csv", "--out", out, "--n-lags", "5",
            "--max-lag-s", "0.5",
        ) == 0
        meta = json.loads((out / "sobi.json").read_text())
        assert meta["lags_s"] == [0.1, 0.2, 0.3, 0.4, 0.5]

    def test_missing_record_is_config_error(self, tmp_path):
        assert run_cli("sobi", tmp_path / "nope.csv", "--out", tmp_path / "x") == 2


class TestPsdCommand:
    def test_psd_and_snr_json(self, sim_dir, tmp_path):
        out = tmp_path / "psd"
        assert run_cli("psd", sim_dir / "record.csv", "--channel", "s_sg", "--out", out) == 0
        payload = json.loads((out / "psd.json").read_text())
        assert payload["channel"] == "s_sg"
        assert "snr_db" in payload
        assert payload["signal_peak"]["psd_value"] > 0
        assert payload["noise_peak"]["psd_value"] > 0
        rows = (out / "psd.csv").read_text().strip().splitlines()
        assert rows[0] == "freq_cpm,psd"
        assert len(rows) == 702  # 0..70.1 cpm in 0.1 steps, plus header

    def test_signal_band_flag_honored(self, sim_dir, tmp_path):
        out = tmp_path / "psd"
        assert run_cli(
            "psd", sim_dir / "record.csv", "--channel", "s_sg", "--out", out,
            "--signal-band", "2.0:4.0",
        ) == 0
        payload = json.loads((out / "psd.json").read_text())
        assert payload["signal_band_cpm"] == [2.0, 4.0]

    def test_missing_channel_is_config_error(self, sim_dir, tmp_path):
        assert run_cli(
            "psd", sim_dir / "record.csv", "--channel", "ghost", "--out", tmp_path / "x"
        ) == 2

    def test_psd_composes_with_separated_sources(self, sim_dir, tmp_path):
        # Separated components are written as an ordinary record, so the
        # psd command serves as the per-component selector.
        sep = tmp_path / "sep"
        assert run_cli("sobi", sim_dir / "record.csv", "--out", sep) == 0
        out = tmp_path / "psd"
        assert run_cli(
            "psd", sep / "sources.csv", "--channel", "source_2", "--out", out
        ) == 0
        payload = json.loads((out / "psd.json").read_text())
        assert payload["channel"] == "source_2"


class TestDenoiseCommand:
    def test_both_methods_report(self, sim_dir, tmp_path):
        out = tmp_path / "den"
        assert run_cli("denoise", sim_dir / "record.csv", "--out", out) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["schema_version"] == 1
        assert report["improvement_db"] == pytest.approx(
            report["snswf_snr_db"] - report["classic_snr_db"]
        )
        assert len(report["assessments"]) == 8
        assert report["selected_components"]
        assert report["config"]["wiener"]["n_taps"] == 40
        for name in ("denoised_snswf", "denoised_classic", "sources", "filter_taps"):
            assert (out / report["artifacts"][name]).exists()
        denoised = load_csv(out / "denoised_snswf.csv")
        assert denoised.n_samples == 2400

    def test_classic_only(self, sim_dir, tmp_path):
        out = tmp_path / "den"
        assert run_cli(
            "denoise", sim_dir / "record.csv", "--out", out, "--method", "classic"
        ) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["method"] == "classic"
        assert "classic_snr_db" in report
        assert (out / "denoised_classic.csv").exists()
        assert not (out / "denoised_snswf.csv").exists()

    def test_snswf_only(self, sim_dir, tmp_path):
        out = tmp_path / "den"
        assert run_cli(
            "denoise", sim_dir / "record.csv", "--out", out, "--method", "snswf"
        ) == 0
        assert (out / "denoised_snswf.csv").exists()
        assert not (out / "denoised_classic.csv").exists()

    def test_repeat_runs_byte_identical(self, sim_dir, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            assert run_cli("denoise", sim_dir / "record.csv", "--out", out) == 0
        assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()

    def test_too_few_references_is_config_error(self, sim_dir, tmp_path):
        assert run_cli(
            "denoise", sim_dir / "record.csv", "--out", tmp_path / "x",
            "--reference-channels", "r_s1",
        ) == 2


class TestHelp:
    @pytest.mark.parametrize("command", ["simulate", "sobi", "psd", "denoise"])
    def test_help_lists_flags(self, command, capsys):
        with pytest.raises(SystemExit) as exc:
            main([command, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        assert "--config" in text
