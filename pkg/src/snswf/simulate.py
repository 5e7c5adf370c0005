"""Synthetic scenario generators for benchmarking the denoising pipeline.

The scenario is one slow signal tone plus one slower interference tone,
injected into a signal channel and eight reference channels on top of
independent pink+white backgrounds.  Magnetometer-kind references receive
the tones at unit gain and carry backgrounds an order of magnitude
stronger than the gradiometer-kind references.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .records import ChannelKind, ChannelMeta, MultichannelRecord
from .units import cpm_to_hz, hz_to_cpm


@dataclass(frozen=True)
class BackgroundModel:
    """Additive per-channel background: white noise plus 1/f^exponent noise.

    ``pink_std`` scales a unit-variance spectrally shaped series, so the
    generated background has standard deviation sqrt(white_std^2 + pink_std^2).
    """

    white_std: float = 3e-4
    pink_std: float = 5e-5
    pink_exponent: float = 1.0

    def __post_init__(self):
        if self.white_std < 0 or self.pink_std < 0:
            raise ValueError("background std values must be >= 0")

    def scaled(self, gain: float) -> "BackgroundModel":
        """Background with both std values multiplied by ``gain``."""
        if gain < 0:
            raise ValueError("gain must be >= 0")
        return replace(self, white_std=gain * self.white_std, pink_std=gain * self.pink_std)


def synth_background(
    cfg: BackgroundModel, n_samples: int, sample_rate_hz: float, seed
) -> np.ndarray:
    """Deterministic background series for a given seed.

    Pink noise is made by shaping seeded white noise in the frequency
    domain (magnitudes scaled by f^(-exponent/2), zero DC), inverse
    transforming, and normalizing to unit variance before scaling.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(n_samples)
    base = rng.standard_normal(n_samples)
    spectrum = np.fft.rfft(base)
    freqs = np.fft.rfftfreq(n_samples, 1.0 / sample_rate_hz)
    shape = np.zeros_like(freqs)
    shape[1:] = freqs[1:] ** (-cfg.pink_exponent / 2.0)
    pink = np.fft.irfft(spectrum * shape, n_samples)
    std = pink.std()
    if std > 0:
        pink = pink / std
    return cfg.white_std * white + cfg.pink_std * pink


@dataclass(frozen=True)
class SimulationConfig:
    """Two-tone benchmark scenario parameters (frequencies in cpm)."""

    f_signal_cpm: float = 3.0
    f_noise_cpm: float = 0.3
    signal_coupling: float = 0.1
    magnetometer_coupling: float = 1.0
    gradiometer_coupling: float = 0.1
    duration_s: float = 120.0
    sample_rate_hz: float = 20.0
    background: BackgroundModel = field(default_factory=BackgroundModel)
    magnetometer_background_gain: float = 10.0
    seed: int = 0

    def __post_init__(self):
        for name in ("signal_coupling", "magnetometer_coupling", "gradiometer_coupling"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        nyquist_cpm = hz_to_cpm(self.sample_rate_hz / 2.0)
        for name in ("f_signal_cpm", "f_noise_cpm"):
            f = getattr(self, name)
            if not 0 <= f < nyquist_cpm:
                raise ValueError(f"{name}={f} must lie in [0, {nyquist_cpm}) cpm")
        if self.duration_s * self.sample_rate_hz < 2:
            raise ValueError("duration_s * sample_rate_hz must be >= 2")
        if self.magnetometer_background_gain < 0:
            raise ValueError("magnetometer_background_gain must be >= 0")


#: Channel layout of the synthetic scenario: one signal gradiometer,
#: three magnetometers, five tensor gradiometers.
SIMULATION_CHANNELS = (
    ChannelMeta("s_sg", ChannelKind.SIGNAL_GRADIOMETER, "pT"),
    ChannelMeta("r_s1", ChannelKind.MAGNETOMETER, "pT"),
    ChannelMeta("r_s2", ChannelKind.MAGNETOMETER, "pT"),
    ChannelMeta("r_s3", ChannelKind.MAGNETOMETER, "pT"),
    ChannelMeta("r_s4", ChannelKind.TENSOR_GRADIOMETER, "pT"),
    ChannelMeta("r_s5", ChannelKind.TENSOR_GRADIOMETER, "pT"),
    ChannelMeta("r_s6", ChannelKind.TENSOR_GRADIOMETER, "pT"),
    ChannelMeta("r_s7", ChannelKind.TENSOR_GRADIOMETER, "pT"),
    ChannelMeta("r_s8", ChannelKind.TENSOR_GRADIOMETER, "pT"),
)


def synth_simulation(cfg: SimulationConfig) -> MultichannelRecord:
    """Generate the 9-channel two-tone scenario.

    The deterministic tone pair is identical across seeds; only the
    backgrounds depend on the seed (one independent stream per channel,
    spawned from ``cfg.seed``).
    """
    n = int(round(cfg.duration_s * cfg.sample_rate_hz))
    t = np.arange(n) / cfg.sample_rate_hz
    tones = np.cos(2 * np.pi * cpm_to_hz(cfg.f_signal_cpm) * t) + np.cos(
        2 * np.pi * cpm_to_hz(cfg.f_noise_cpm) * t
    )

    children = np.random.SeedSequence(cfg.seed).spawn(len(SIMULATION_CHANNELS))
    mag_background = cfg.background.scaled(cfg.magnetometer_background_gain)

    data = np.empty((len(SIMULATION_CHANNELS), n))
    for i, meta in enumerate(SIMULATION_CHANNELS):
        if meta.kind is ChannelKind.SIGNAL_GRADIOMETER:
            model, coupling = cfg.background, cfg.signal_coupling
        elif meta.kind is ChannelKind.MAGNETOMETER:
            model, coupling = mag_background, cfg.magnetometer_coupling
        else:
            model, coupling = cfg.background, cfg.gradiometer_coupling
        data[i] = synth_background(model, n, cfg.sample_rate_hz, children[i]) + coupling * tones

    return MultichannelRecord(cfg.sample_rate_hz, SIMULATION_CHANNELS, data)
