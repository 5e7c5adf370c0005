"""Autoregressive spectral estimation and band-peak SNR reporting.

Frequencies at the API surface are in cycles per minute (cpm); internal
math converts to Hz via cpm = 60 * Hz.  The SNR metric is
``20 * log10(signal_peak / noise_peak)`` on power-spectral-density peak
values, matching the convention of the rest of the pipeline's reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_series, check_band
from .exceptions import DegenerateInputError, UndefinedSnrError
from .units import hz_to_cpm

#: Burg recursion stops early once the residual energy falls below this
#: fraction of the input energy (numerically perfect prediction).
_BURG_ENERGY_FLOOR = 1e-24


@dataclass(frozen=True)
class ArModel:
    """All-pole model in prediction-error form: e(n) = x(n) + sum_k a_k x(n-k)."""

    order: int
    coeffs: tuple[float, ...]
    noise_variance: float
    sample_rate_hz: float

    def __post_init__(self):
        if self.order != len(self.coeffs):
            raise ValueError("order must equal len(coeffs)")
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")

    def prediction_polynomial(self) -> np.ndarray:
        """Coefficients [1, a_1, ..., a_p] of the prediction-error filter."""
        return np.concatenate(([1.0], np.asarray(self.coeffs, dtype=float)))

    def poles(self) -> np.ndarray:
        """Roots of the prediction-error polynomial (inside unit circle for stable fits)."""
        if self.order == 0:
            return np.empty(0, dtype=complex)
        return np.roots(self.prediction_polynomial())


@dataclass(frozen=True)
class PsdEstimate:
    """Power spectral density evaluated on an ascending cpm grid."""

    freqs_cpm: np.ndarray
    psd: np.ndarray
    source: ArModel

    def __post_init__(self):
        freqs = np.asarray(self.freqs_cpm, dtype=float)
        psd = np.asarray(self.psd, dtype=float)
        if freqs.shape != psd.shape or freqs.ndim != 1:
            raise ValueError("freqs_cpm and psd must be matching 1-D arrays")
        if freqs.size and np.any(np.diff(freqs) <= 0):
            raise ValueError("frequency grid must be strictly ascending")
        if np.any(psd < 0):
            raise ValueError("psd must be nonnegative")
        object.__setattr__(self, "freqs_cpm", freqs)
        object.__setattr__(self, "psd", psd)


@dataclass(frozen=True)
class SpectralPeak:
    freq_cpm: float
    psd_value: float


@dataclass(frozen=True)
class SnrResult:
    snr_db: float
    signal_peak: SpectralPeak
    noise_peak: SpectralPeak


@dataclass(frozen=True)
class SpectralConfig:
    """AR order and evaluation grid used by the pipeline."""

    ar_order: int = 30
    grid_max_cpm: float = 70.0
    grid_step_cpm: float = 0.1

    def __post_init__(self):
        if not 1 <= self.ar_order <= 200:
            raise ValueError("ar_order must be in [1, 200]")
        if self.grid_step_cpm <= 0 or self.grid_max_cpm <= 0:
            raise ValueError("grid parameters must be positive")

    def grid(self, sample_rate_hz: float) -> np.ndarray:
        """cpm grid from 0 to min(grid_max_cpm, Nyquist) in grid_step_cpm steps."""
        top = min(self.grid_max_cpm, hz_to_cpm(sample_rate_hz / 2.0))
        n = int(math.floor(top / self.grid_step_cpm)) + 1
        return self.grid_step_cpm * np.arange(n)


def burg_fit(x, order: int, sample_rate_hz: float) -> ArModel:
    """Fit an AR model by Burg's method (reflection-coefficient recursion).

    The input is demeaned internally.  The returned model is minimum-phase
    by construction; ``noise_variance`` is the final prediction-error power.
    """
    x = as_series(x, "x")
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if len(x) < 2 * order + 1:
        raise ValueError(f"series of length {len(x)} too short for order {order}")
    x = x - x.mean()
    energy = float(np.dot(x, x))
    if energy == 0.0:
        raise DegenerateInputError("input series has zero variance")

    rho = energy / len(x)
    ef = x.copy()
    eb = x.copy()
    a = np.empty(0)
    for _ in range(order):
        efp = ef[1:]
        ebp = eb[:-1]
        den = float(np.dot(efp, efp) + np.dot(ebp, ebp))
        if den <= _BURG_ENERGY_FLOOR * energy:
            # Residual is numerically zero: remaining coefficients stay 0.
            a = np.concatenate([a, np.zeros(order - len(a))])
            rho = max(rho, 0.0)
            break
        k = -2.0 * float(np.dot(efp, ebp)) / den
        a = np.concatenate([a + k * a[::-1], [k]])
        rho *= 1.0 - k * k
        ef = efp + k * ebp
        eb = ebp + k * efp

    return ArModel(
        order=order,
        coeffs=tuple(a),
        noise_variance=max(float(rho), 0.0),
        sample_rate_hz=float(sample_rate_hz),
    )


def ar_psd(model: ArModel, freqs_cpm) -> PsdEstimate:
    """Evaluate P(f) = noise_variance / (fs * |A(e^{i*2*pi*f/fs})|^2) on a cpm grid."""
    freqs = np.asarray(freqs_cpm, dtype=float)
    if freqs.ndim != 1 or freqs.size == 0:
        raise ValueError("freqs_cpm must be a nonempty 1-D array")
    nyquist_cpm = hz_to_cpm(model.sample_rate_hz / 2.0)
    if np.any(freqs < 0) or np.any(freqs > nyquist_cpm * (1 + 1e-12)):
        raise ValueError(f"frequencies must lie in [0, {nyquist_cpm}] cpm")
    omega = 2.0 * np.pi * (freqs / 60.0) / model.sample_rate_hz
    poly = model.prediction_polynomial()
    # A(e^{i w}) = sum_k poly[k] e^{-i w k}
    response = np.exp(-1j * np.outer(omega, np.arange(len(poly)))) @ poly
    psd = model.noise_variance / (model.sample_rate_hz * np.abs(response) ** 2)
    return PsdEstimate(freqs_cpm=freqs, psd=psd, source=model)


def find_peaks(psd: PsdEstimate, band_cpm) -> list[SpectralPeak]:
    """Local maxima of the PSD within a band, tallest first.

    Interior grid points must strictly exceed both neighbors; the grid
    endpoints qualify when they exceed their single neighbor.
    """
    lo, hi = check_band(band_cpm, "band_cpm")
    freqs, values = psd.freqs_cpm, psd.psd
    in_band = (freqs >= lo) & (freqs <= hi)
    if not np.any(in_band):
        raise ValueError(f"band [{lo}, {hi}] cpm does not intersect the grid")
    peaks = []
    n = len(freqs)
    for i in np.nonzero(in_band)[0]:
        left_ok = i == 0 or values[i] > values[i - 1]
        right_ok = i == n - 1 or values[i] > values[i + 1]
        if left_ok and right_ok and n > 1:
            peaks.append(SpectralPeak(float(freqs[i]), float(values[i])))
    peaks.sort(key=lambda p: p.psd_value, reverse=True)
    return peaks


def _tallest(psd: PsdEstimate, band) -> SpectralPeak:
    """Tallest strict peak in a band, falling back to the band argmax."""
    peaks = find_peaks(psd, band)
    if peaks:
        return peaks[0]
    lo, hi = band
    idx = np.nonzero((psd.freqs_cpm >= lo) & (psd.freqs_cpm <= hi))[0]
    best = idx[np.argmax(psd.psd[idx])]
    return SpectralPeak(float(psd.freqs_cpm[best]), float(psd.psd[best]))


def snr_db(psd: PsdEstimate, signal_band_cpm, noise_bands_cpm) -> SnrResult:
    """Peak-ratio SNR: 20*log10 of tallest signal-band peak over tallest
    noise-band peak (noise searched across all supplied bands)."""
    signal_peak = _tallest(psd, check_band(signal_band_cpm, "signal_band_cpm"))
    if not noise_bands_cpm:
        raise ValueError("need at least one noise band")
    candidates = [_tallest(psd, check_band(b, "noise_band_cpm")) for b in noise_bands_cpm]
    noise_peak = max(candidates, key=lambda p: p.psd_value)
    if noise_peak.psd_value <= 0 or signal_peak.psd_value <= 0:
        raise UndefinedSnrError(
            f"band peak power is zero (signal={signal_peak.psd_value}, "
            f"noise={noise_peak.psd_value})"
        )
    value = 20.0 * math.log10(signal_peak.psd_value / noise_peak.psd_value)
    return SnrResult(snr_db=value, signal_peak=signal_peak, noise_peak=noise_peak)


def fit_psd(x, sample_rate_hz: float, config: SpectralConfig | None = None) -> PsdEstimate:
    """Burg fit followed by grid evaluation, using the shared pipeline config."""
    config = config or SpectralConfig()
    model = burg_fit(x, config.ar_order, sample_rate_hz)
    return ar_psd(model, config.grid(sample_rate_hz))
