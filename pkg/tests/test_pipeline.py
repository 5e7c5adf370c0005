import math

import numpy as np
import pytest

from snswf import (
    BackgroundModel,
    ChannelMeta,
    ComponentAssessment,
    MultichannelRecord,
    SelectionPolicy,
    SelectionReason,
    SeparationResult,
    WienerConfig,
    assess_components,
    run_classic,
    run_snswf,
    select_references,
    synth_background,
)
from _scenarios import BENCHMARK_LAGS_S, FS, benchmark_record, tone_power


def assessment(idx, snr, peak_cpm, peak_value=1.0):
    return ComponentAssessment(
        component_index=idx,
        snr_db=snr,
        main_noise_peak_cpm=peak_cpm,
        main_noise_peak_value=peak_value,
    )


def synthetic_separation(sources, fs=FS):
    n = sources.shape[0]
    return SeparationResult(
        sources=np.asarray(sources, float),
        mixing=np.eye(n),
        unmixing=np.eye(n),
        whitener=np.eye(n),
        noise_variance=0.0,
        lags_s=(0.1,),
        sample_rate_hz=fs,
    )


class TestSelectReferences:
    def test_reference_dataset_shape(self):
        # Eight components shaped like a published assessment table: the
        # minimum-SNR component plus the high-frequency cardiac-like one.
        snrs = [-42.5, -0.6, -39.2, -13.7, -16.1, -22.5, -9.2, -22.2]
        peaks = [0.4, 1.4, 0.5, 61.9, 2.1, 3.9, 0.8, 0.8]
        table = [assessment(i, s, p) for i, (s, p) in enumerate(zip(snrs, peaks))]
        assert select_references(table, SelectionPolicy()) == [0, 3]

    def test_single_component_always_selected(self):
        table = [assessment(0, 55.0, 1.0)]
        assert select_references(table, SelectionPolicy()) == [0]

    def test_tie_breaks_to_lower_index(self):
        table = [assessment(0, -10.0, 0.5), assessment(1, -10.0, 0.5)]
        assert select_references(table, SelectionPolicy()) == [0]

    def test_high_frequency_rule_requires_snr_ceiling(self):
        table = [assessment(0, -30.0, 0.5), assessment(1, 5.0, 60.0)]
        assert select_references(table, SelectionPolicy()) == [0]
        table[1].snr_db = -1.0
        assert select_references(table, SelectionPolicy()) == [0, 1]

    def test_max_selected_caps_extras(self):
        table = [
            assessment(0, -30.0, 0.5),
            assessment(1, -20.0, 60.0),
            assessment(2, -25.0, 45.0),
        ]
        assert select_references(table, SelectionPolicy(max_selected=2)) == [0, 2]
        assert select_references(table, SelectionPolicy(max_selected=3)) == [0, 2, 1]

    def test_nan_components_never_selected(self):
        table = [assessment(0, math.nan, math.nan), assessment(1, 3.0, 1.0)]
        assert select_references(table, SelectionPolicy()) == [1]

    def test_all_nan_rejected(self):
        table = [assessment(0, math.nan, math.nan)]
        with pytest.raises(ValueError, match="assessable"):
            select_references(table, SelectionPolicy())


class TestAssessComponents:
    def two_component_separation(self):
        rng = np.random.default_rng(0)
        n = 4800
        t = np.arange(n) / FS
        noisy = np.cos(2 * np.pi * (0.3 / 60.0) * t) + 0.001 * rng.standard_normal(n)
        pure = np.cos(2 * np.pi * (3.0 / 60.0) * t) + 0.0005 * rng.standard_normal(n)
        return synthetic_separation(np.vstack([noisy, pure]))

    def test_noise_component_selected_signal_component_not(self):
        result = assess_components(self.two_component_separation())
        noisy, pure = result
        assert noisy.selected
        assert noisy.selection_reason is SelectionReason.LOWEST_SNR
        assert not pure.selected
        assert pure.selection_reason is SelectionReason.NOT_SELECTED
        assert pure.snr_db > 10.0
        assert noisy.snr_db < -10.0

    def test_degenerate_component_marked_nan(self):
        rng = np.random.default_rng(1)
        sources = np.vstack([np.full(2000, 2.0), rng.standard_normal(2000)])
        result = assess_components(synthetic_separation(sources))
        assert math.isnan(result[0].snr_db)
        assert not result[0].selected
        assert result[1].selected

    def test_selection_invariant_to_component_scaling(self):
        sep = self.two_component_separation()
        base = [a.selected for a in assess_components(sep)]
        sep.sources[0] *= 10.0
        scaled = [a.selected for a in assess_components(sep)]
        assert base == scaled

    def test_selection_maps_through_permutation(self):
        sep = self.two_component_separation()
        base = {a.component_index for a in assess_components(sep) if a.selected}
        permuted = synthetic_separation(sep.sources[::-1])
        mapped = {a.component_index for a in assess_components(permuted) if a.selected}
        assert mapped == {1 - i for i in base}


def record_from_rows(rows, fs=FS, names=None):
    rows = np.asarray(rows, float)
    names = names or [f"c{i}" for i in range(rows.shape[0])]
    return MultichannelRecord(fs, tuple(ChannelMeta(n) for n in names), rows)


class TestRunSnswf:
    def test_benchmark_scenario_beats_classic(self):
        result = run_snswf(benchmark_record(seed=0), "s_sg", lags_s=BENCHMARK_LAGS_S)
        report = result.report
        assert report.snswf_snr_db > report.classic_snr_db
        assert report.improvement_db >= 10.0
        assert report.selected_components
        selected = [a for a in report.assessments if a.selected]
        assert all(a.snr_db <= -20.0 for a in selected[:1])

    def test_report_arithmetic_exact(self):
        result = run_snswf(benchmark_record(seed=1), "s_sg", lags_s=BENCHMARK_LAGS_S)
        report = result.report
        assert report.improvement_db == report.snswf_snr_db - report.classic_snr_db

    def test_reports_are_deterministic(self):
        a = run_snswf(benchmark_record(seed=2), "s_sg", lags_s=BENCHMARK_LAGS_S)
        b = run_snswf(benchmark_record(seed=2), "s_sg", lags_s=BENCHMARK_LAGS_S)
        assert a.report.to_json() == b.report.to_json()
        assert np.array_equal(a.denoised, b.denoised)

    def test_config_echo_resolves_defaults(self):
        result = run_snswf(benchmark_record(seed=3), "s_sg", lags_s=BENCHMARK_LAGS_S)
        config = result.report.config
        assert config["wiener"]["n_taps"] == 40
        assert config["wiener"]["snswf_regularization"] > 0
        assert config["policy"]["signal_band_cpm"] == [2.5, 3.5]
        assert config["spectral"]["ar_order"] == 30
        assert config["sobi"]["lags_s"] == list(BENCHMARK_LAGS_S)

    def test_clean_signal_passes_through_untouched_references(self):
        # Nothing in the references correlates with the primary channel,
        # so the denoised series stays essentially the clean signal.
        n = 4800
        t = np.arange(n) / FS
        clean = 0.1 * np.cos(2 * np.pi * (3.0 / 60.0) * t)
        rows = [clean]
        for k in range(8):
            rows.append(
                synth_background(BackgroundModel(0.01, 0.002), n, FS, seed=100 + k)
            )
        result = run_snswf(record_from_rows(rows), "c0")
        corr = np.corrcoef(result.denoised, clean - clean.mean())[0, 1]
        assert corr >= 0.99

    def test_uncontaminated_references_match_classic(self):
        # References that sense only the interference: the separation step
        # buys nothing, so both filters land within a few dB.
        improvements = []
        for seed in range(5):
            n = 24_000
            t = np.arange(n) / FS
            noise_tone = np.cos(2 * np.pi * (0.3 / 60.0) * t)
            d = (
                0.1 * np.cos(2 * np.pi * (3.0 / 60.0) * t)
                + 0.1 * noise_tone
                + synth_background(BackgroundModel(1e-3, 1e-4), n, FS, seed)
            )
            rows = [d]
            for k in range(2):
                rows.append(
                    noise_tone
                    + synth_background(
                        BackgroundModel(0.2, 0.02), n, FS, 1000 + 100 * seed + k
                    )
                )
            result = run_snswf(record_from_rows(rows), "c0")
            improvements.append(result.report.improvement_db)
        assert abs(float(np.median(improvements))) <= 3.0

    def test_warning_when_all_components_signal_dominant(self):
        rng = np.random.default_rng(2)
        n = 4800
        t = np.arange(n) / FS
        rows = [
            0.1 * np.cos(2 * np.pi * (3.0 / 60.0) * t) + 0.01 * rng.standard_normal(n),
            np.cos(2 * np.pi * (3.0 / 60.0) * t) + 0.05 * rng.standard_normal(n),
            np.cos(2 * np.pi * (3.0 / 60.0) * t + 0.6) + 0.05 * rng.standard_normal(n),
        ]
        policy = SelectionPolicy(snr_ceiling_db=-80.0)
        result = run_snswf(record_from_rows(rows), "c0", policy=policy)
        assert any("signal-dominant" in w for w in result.report.warnings)
        assert result.report.selected_components

    def test_unknown_channel_rejected(self):
        with pytest.raises(ValueError, match="no channel"):
            run_snswf(benchmark_record(seed=0), "nope")

    def test_needs_two_references(self):
        rng = np.random.default_rng(3)
        rec = record_from_rows(rng.standard_normal((2, 500)))
        with pytest.raises(ValueError, match="reference"):
            run_snswf(rec, "c0")

    def test_signal_channel_cannot_be_reference(self):
        rec = benchmark_record(seed=0)
        with pytest.raises(ValueError, match="reference"):
            run_snswf(rec, "s_sg", ["s_sg", "r_s1"])


class TestRunClassic:
    def test_null_references_leave_input_alone(self):
        rng = np.random.default_rng(4)
        n = 100_000
        d = synth_background(BackgroundModel(0.0, 1.0), n, FS, seed=11)
        rows = [d, rng.standard_normal(n), rng.standard_normal(n)]
        result = run_classic(
            record_from_rows(rows), "c0", wiener_config=WienerConfig(n_taps=2)
        )
        dd = d - d.mean()
        assert np.linalg.norm(result.denoised - dd) / np.linalg.norm(dd) <= 0.01

    def test_noise_references_suppress_tone(self):
        rng = np.random.default_rng(5)
        n = 8000
        t = np.arange(n) / FS
        noise_tone = np.cos(2 * np.pi * 0.3 * t)
        d = np.cos(2 * np.pi * 1.3 * t) + noise_tone + 0.01 * rng.standard_normal(n)
        rows = [
            d,
            0.9 * noise_tone + 0.05 * rng.standard_normal(n),
            1.1 * noise_tone + 0.05 * rng.standard_normal(n),
        ]
        result = run_classic(record_from_rows(rows), "c0")
        assert tone_power(result.denoised, 0.3) <= 1e-2 * tone_power(d, 0.3)

    def test_benchmark_direction(self):
        classic = run_classic(benchmark_record(seed=0), "s_sg")
        snswf = run_snswf(benchmark_record(seed=0), "s_sg", lags_s=BENCHMARK_LAGS_S)
        assert classic.snr_db < snswf.report.snswf_snr_db


class TestSelectionPolicy:
    def test_default_noise_bands_complement_signal_band(self):
        bands = SelectionPolicy().resolve_noise_bands(FS)
        assert bands[0] == (0.05, 2.5)
        assert bands[1][0] == 3.5
        assert bands[1][1] == pytest.approx(600.0)

    def test_explicit_noise_bands_pass_through(self):
        policy = SelectionPolicy(noise_bands_cpm=((0.1, 1.0),))
        assert policy.resolve_noise_bands(FS) == ((0.1, 1.0),)

    def test_invalid_band_rejected(self):
        with pytest.raises(ValueError):
            SelectionPolicy(signal_band_cpm=(3.5, 2.5))
