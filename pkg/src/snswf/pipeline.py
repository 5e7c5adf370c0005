"""End-to-end denoising: separate the references, rate each separated
component by band-peak SNR, keep the noise-dominant components as filter
inputs, and cancel them from the signal channel.

``run_classic`` is the baseline that feeds the raw reference channels
straight into the filter; ``run_snswf`` inserts the separation/selection
stage.  Both report SNRs computed with one shared spectral configuration
and band policy so the comparison isolates the filtering method.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import DegenerateInputError, UndefinedSnrError
from .records import MultichannelRecord, demean
from .units import hz_to_cpm
from .sobi import SeparationResult, sobi
from .spectral import PsdEstimate, SpectralConfig, fit_psd, snr_db
from .wiener import DEFAULT_N_TAPS, WienerDesign, cancel, design_wiener

REPORT_SCHEMA_VERSION = 1


class SelectionReason(Enum):
    LOWEST_SNR = "lowest_snr"
    HIGH_FREQUENCY_NOISE = "high_frequency_noise"
    NOT_SELECTED = "not_selected"


@dataclass(frozen=True)
class SelectionPolicy:
    """Bands and thresholds governing reference-component selection.

    ``noise_bands_cpm=None`` resolves to the complement of the signal band:
    (0.05, signal_lo) and (signal_hi, Nyquist).
    """

    signal_band_cpm: tuple[float, float] = (2.5, 3.5)
    noise_bands_cpm: tuple[tuple[float, float], ...] | None = None
    high_freq_threshold_cpm: float = 30.0
    max_selected: int = 2
    snr_ceiling_db: float = 0.0

    def __post_init__(self):
        lo, hi = self.signal_band_cpm
        if not lo < hi:
            raise ValueError(f"signal band must have lo < hi, got {self.signal_band_cpm}")
        if self.max_selected < 1:
            raise ValueError("max_selected must be >= 1")

    def resolve_noise_bands(self, sample_rate_hz: float) -> tuple[tuple[float, float], ...]:
        if self.noise_bands_cpm is not None:
            return tuple((float(lo), float(hi)) for lo, hi in self.noise_bands_cpm)
        lo, hi = self.signal_band_cpm
        nyquist_cpm = hz_to_cpm(sample_rate_hz / 2.0)
        bands = []
        if lo > 0.05:
            bands.append((0.05, lo))
        if nyquist_cpm > hi:
            bands.append((hi, nyquist_cpm))
        if not bands:
            raise ValueError("signal band leaves no room for noise bands")
        return tuple(bands)


@dataclass
class ComponentAssessment:
    """Per-component SNR and dominant noise peak, with the selection outcome."""

    component_index: int
    snr_db: float
    main_noise_peak_cpm: float
    main_noise_peak_value: float
    selected: bool = False
    selection_reason: SelectionReason = SelectionReason.NOT_SELECTED

    @property
    def assessable(self) -> bool:
        return not math.isnan(self.snr_db)

    def to_dict(self) -> dict:
        def _jsonable(value):
            return None if math.isnan(value) else value

        return {
            "component_index": self.component_index,
            "snr_db": _jsonable(self.snr_db),
            "main_noise_peak_cpm": _jsonable(self.main_noise_peak_cpm),
            "main_noise_peak_value": _jsonable(self.main_noise_peak_value),
            "selected": self.selected,
            "selection_reason": self.selection_reason.value,
        }


@dataclass
class DenoiseReport:
    """Raw/classic/denoised SNR comparison plus the assessment table."""

    raw_snr_db: float
    classic_snr_db: float
    snswf_snr_db: float
    improvement_db: float
    assessments: list[ComponentAssessment]
    selected_components: list[int]
    warnings: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "raw_snr_db": self.raw_snr_db,
            "classic_snr_db": self.classic_snr_db,
            "snswf_snr_db": self.snswf_snr_db,
            "improvement_db": self.improvement_db,
            "assessments": [a.to_dict() for a in self.assessments],
            "selected_components": list(self.selected_components),
            "warnings": list(self.warnings),
            "config": self.config,
            "artifacts": self.artifacts,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)


def assess_components(
    sep: SeparationResult,
    policy: SelectionPolicy | None = None,
    spectral_config: SpectralConfig | None = None,
) -> list[ComponentAssessment]:
    """Rate every separated component and flag the selected references.

    Degenerate (constant) components receive NaN markers and are never
    selected.
    """
    assessments, _ = assess_components_with_psds(sep, policy, spectral_config)
    return assessments


def assess_components_with_psds(
    sep: SeparationResult,
    policy: SelectionPolicy | None = None,
    spectral_config: SpectralConfig | None = None,
) -> tuple[list[ComponentAssessment], list[PsdEstimate | None]]:
    """Like :func:`assess_components`, also returning each component's PSD."""
    policy = policy or SelectionPolicy()
    spectral_config = spectral_config or SpectralConfig()
    if sep.n_sources < 1:
        raise ValueError("separation result has no sources")
    noise_bands = policy.resolve_noise_bands(sep.sample_rate_hz)

    assessments: list[ComponentAssessment] = []
    psds: list[PsdEstimate | None] = []
    for idx, row in enumerate(sep.sources):
        try:
            psd = fit_psd(row, sep.sample_rate_hz, spectral_config)
            result = snr_db(psd, policy.signal_band_cpm, noise_bands)
        except (DegenerateInputError, UndefinedSnrError):
            assessments.append(
                ComponentAssessment(idx, math.nan, math.nan, math.nan)
            )
            psds.append(None)
            continue
        assessments.append(
            ComponentAssessment(
                component_index=idx,
                snr_db=result.snr_db,
                main_noise_peak_cpm=result.noise_peak.freq_cpm,
                main_noise_peak_value=result.noise_peak.psd_value,
            )
        )
        psds.append(psd)

    for idx, reason in _selection_with_reasons(assessments, policy):
        assessments[idx].selected = True
        assessments[idx].selection_reason = reason
    return assessments, psds


def _selection_with_reasons(
    assessments: list[ComponentAssessment], policy: SelectionPolicy
) -> list[tuple[int, SelectionReason]]:
    usable = [a for a in assessments if a.assessable]
    if not usable:
        raise ValueError("no assessable components to select from")
    primary = min(usable, key=lambda a: (a.snr_db, a.component_index))
    chosen = [(primary.component_index, SelectionReason.LOWEST_SNR)]
    extras = sorted(
        (
            a
            for a in usable
            if a is not primary
            and a.main_noise_peak_cpm >= policy.high_freq_threshold_cpm
            and a.snr_db <= policy.snr_ceiling_db
        ),
        key=lambda a: (a.snr_db, a.component_index),
    )
    for a in extras:
        if len(chosen) >= policy.max_selected:
            break
        chosen.append((a.component_index, SelectionReason.HIGH_FREQUENCY_NOISE))
    return chosen


def select_references(
    assessments: list[ComponentAssessment], policy: SelectionPolicy | None = None
) -> list[int]:
    """Deterministic selection: the minimum-SNR component always, plus any
    high-frequency noise component at or below the SNR ceiling, up to
    ``max_selected`` total (lowest SNR first, ties to the lower index)."""
    policy = policy or SelectionPolicy()
    return [idx for idx, _ in _selection_with_reasons(assessments, policy)]


@dataclass(frozen=True)
class WienerConfig:
    """Filter length and damping; ``regularization=None`` means the
    data-scaled default (1e-6 x largest zero-lag reference power)."""

    n_taps: int = DEFAULT_N_TAPS
    regularization: float | None = None

    def __post_init__(self):
        if self.n_taps < 1:
            raise ValueError("n_taps must be >= 1")
        if self.regularization is not None and self.regularization < 0:
            raise ValueError("regularization must be >= 0")


@dataclass
class ClassicResult:
    denoised: np.ndarray
    snr_db: float
    design: WienerDesign


@dataclass
class SnswfResult:
    denoised: np.ndarray
    report: DenoiseReport
    separation: SeparationResult
    psds: list[PsdEstimate | None]
    design: WienerDesign


def _resolve_references(
    record: MultichannelRecord, signal_channel: str, reference_channels
) -> list[str]:
    names = record.channel_names()
    if signal_channel not in names:
        raise ValueError(f"no channel named {signal_channel!r}")
    if reference_channels is None:
        refs = [n for n in names if n != signal_channel]
    else:
        refs = list(reference_channels)
        for name in refs:
            record.channel_index(name)
        if signal_channel in refs:
            raise ValueError("signal channel cannot also be a reference")
    if len(refs) < 2:
        raise ValueError(f"need at least 2 reference channels, got {len(refs)}")
    return refs


def _series_snr(x, sample_rate_hz, policy, spectral_config) -> float:
    psd = fit_psd(x, sample_rate_hz, spectral_config)
    bands = policy.resolve_noise_bands(sample_rate_hz)
    return snr_db(psd, policy.signal_band_cpm, bands).snr_db


def run_classic(
    record: MultichannelRecord,
    signal_channel: str,
    reference_channels=None,
    wiener_config: WienerConfig | None = None,
    spectral_config: SpectralConfig | None = None,
    policy: SelectionPolicy | None = None,
) -> ClassicResult:
    """Wiener cancellation using the raw reference channels directly."""
    wiener_config = wiener_config or WienerConfig()
    spectral_config = spectral_config or SpectralConfig()
    policy = policy or SelectionPolicy()
    refs = _resolve_references(record, signal_channel, reference_channels)
    rec = demean(record)
    d = rec.channel(signal_channel)
    X = np.vstack([rec.channel(n) for n in refs])
    design = design_wiener(
        X, d, wiener_config.n_taps, wiener_config.regularization, rec.sample_rate_hz
    )
    denoised = cancel(design, X, d)
    value = _series_snr(denoised, rec.sample_rate_hz, policy, spectral_config)
    return ClassicResult(denoised=denoised, snr_db=value, design=design)


def run_snswf(
    record: MultichannelRecord,
    signal_channel: str,
    reference_channels=None,
    policy: SelectionPolicy | None = None,
    wiener_config: WienerConfig | None = None,
    spectral_config: SpectralConfig | None = None,
    lags_s=None,
    n_sources: int | None = None,
) -> SnswfResult:
    """Full separation-select-cancel pipeline with a comparative report."""
    policy = policy or SelectionPolicy()
    wiener_config = wiener_config or WienerConfig()
    spectral_config = spectral_config or SpectralConfig()
    refs = _resolve_references(record, signal_channel, reference_channels)

    rec = demean(record)
    d = rec.channel(signal_channel)
    X = np.vstack([rec.channel(n) for n in refs])

    sep = sobi(X, rec.sample_rate_hz, lags_s=lags_s, n_sources=n_sources)
    warnings: list[str] = []
    if not sep.converged:
        warnings.append(
            f"joint diagonalization did not converge within {sep.n_sweeps} sweeps"
        )

    assessments, psds = assess_components_with_psds(sep, policy, spectral_config)
    selected = select_references(assessments, policy)
    usable = [a for a in assessments if a.assessable]
    if usable and min(a.snr_db for a in usable) > policy.snr_ceiling_db:
        warnings.append(
            "all components are signal-dominant (every SNR above the ceiling); "
            "proceeding with the minimum-SNR component"
        )

    selected_sources = sep.sources[selected]
    design = design_wiener(
        selected_sources,
        d,
        wiener_config.n_taps,
        wiener_config.regularization,
        rec.sample_rate_hz,
    )
    denoised = cancel(design, selected_sources, d)

    classic = run_classic(
        record, signal_channel, refs, wiener_config, spectral_config, policy
    )
    raw_snr = _series_snr(d, rec.sample_rate_hz, policy, spectral_config)
    snswf_snr = _series_snr(denoised, rec.sample_rate_hz, policy, spectral_config)

    config_echo = {
        "signal_channel": signal_channel,
        "reference_channels": refs,
        "sample_rate_hz": rec.sample_rate_hz,
        "policy": {
            "signal_band_cpm": list(policy.signal_band_cpm),
            "noise_bands_cpm": [list(b) for b in policy.resolve_noise_bands(rec.sample_rate_hz)],
            "high_freq_threshold_cpm": policy.high_freq_threshold_cpm,
            "max_selected": policy.max_selected,
            "snr_ceiling_db": policy.snr_ceiling_db,
        },
        "wiener": {
            "n_taps": wiener_config.n_taps,
            "regularization": wiener_config.regularization,
            "snswf_regularization": design.regularization,
            "classic_regularization": classic.design.regularization,
        },
        "spectral": {
            "ar_order": spectral_config.ar_order,
            "grid_max_cpm": spectral_config.grid_max_cpm,
            "grid_step_cpm": spectral_config.grid_step_cpm,
        },
        "sobi": {
            "lags_s": list(sep.lags_s),
            "n_sources": sep.n_sources,
            "converged": sep.converged,
        },
    }
    report = DenoiseReport(
        raw_snr_db=raw_snr,
        classic_snr_db=classic.snr_db,
        snswf_snr_db=snswf_snr,
        improvement_db=snswf_snr - classic.snr_db,
        assessments=assessments,
        selected_components=selected,
        warnings=warnings,
        config=config_echo,
    )
    return SnswfResult(
        denoised=denoised, report=report, separation=sep, psds=psds, design=design
    )
