"""Scikit-learn style estimators wrapping the functional core.

Arrays follow the sklearn layout (n_samples, n_channels); the functional
API underneath works on (n_channels, n_samples).  All estimators support
``get_params``/``set_params``/``clone`` and compose with
``sklearn.pipeline.Pipeline``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

from .pipeline import SelectionPolicy, SpectralConfig, WienerConfig, run_snswf
from .records import ChannelMeta, MultichannelRecord
from .sobi import DEFAULT_MAX_LAG_S, DEFAULT_N_LAGS, default_lags_s, sobi
from .wiener import DEFAULT_N_TAPS, apply_fir, design_wiener


def _check_signals(X) -> np.ndarray:
    return check_array(X, ensure_2d=True, dtype=np.float64, ensure_min_samples=2)


class SobiSeparator(TransformerMixin, BaseEstimator):
    """Blind source separation by joint diagonalization of lagged covariances.

    Parameters
    ----------
    sample_rate_hz : float, default=20.0
        Sampling rate of the rows of ``X`` (time runs down the columns).
    n_sources : int or None, default=None
        Number of sources to retain; None keeps all channels.
    n_lags, max_lag_s : lag grid used for the lagged covariances.
    tol, max_sweeps : joint-diagonalization stopping controls.

    Attributes
    ----------
    mixing_ : ndarray of shape (n_channels, n_sources)
    unmixing_ : ndarray of shape (n_sources, n_channels)
    whitener_ : ndarray of shape (n_sources, n_channels)
    noise_variance_ : float
    lags_s_ : tuple of realized lags in seconds
    converged_ : bool
    """

    def __init__(
        self,
        sample_rate_hz: float = 20.0,
        n_sources: int | None = None,
        n_lags: int = DEFAULT_N_LAGS,
        max_lag_s: float = DEFAULT_MAX_LAG_S,
        tol: float = 1e-8,
        max_sweeps: int = 100,
    ):
        self.sample_rate_hz = sample_rate_hz
        self.n_sources = n_sources
        self.n_lags = n_lags
        self.max_lag_s = max_lag_s
        self.tol = tol
        self.max_sweeps = max_sweeps

    def fit(self, X, y=None):
        X = _check_signals(X)
        result = sobi(
            X.T,
            self.sample_rate_hz,
            lags_s=default_lags_s(self.n_lags, self.max_lag_s),
            n_sources=self.n_sources,
            tol=self.tol,
            max_sweeps=self.max_sweeps,
        )
        self.mixing_ = result.mixing
        self.unmixing_ = result.unmixing
        self.whitener_ = result.whitener
        self.noise_variance_ = result.noise_variance
        self.lags_s_ = result.lags_s
        self.converged_ = result.converged
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "unmixing_")
        X = _check_signals(X)
        return X @ self.unmixing_.T

    def inverse_transform(self, S):
        check_is_fitted(self, "mixing_")
        S = _check_signals(S)
        return S @ self.mixing_.T


class WienerCanceller(RegressorMixin, BaseEstimator):
    """Multichannel FIR regression of a primary series on lagged references.

    ``fit(X, y)`` solves the regularized block-Toeplitz normal equations;
    ``predict(X)`` returns the reference-based estimate of ``y`` and
    ``denoise(X, y)`` the cancellation residual ``y - predict(X)``.
    """

    def __init__(
        self,
        n_taps: int = DEFAULT_N_TAPS,
        regularization: float | None = None,
        sample_rate_hz: float = 20.0,
    ):
        self.n_taps = n_taps
        self.regularization = regularization
        self.sample_rate_hz = sample_rate_hz

    def fit(self, X, y):
        X = _check_signals(X)
        y = column_or_1d(y)
        if len(y) != X.shape[0]:
            raise ValueError(f"X has {X.shape[0]} samples but y has {len(y)}")
        self.design_ = design_wiener(
            X.T, y, self.n_taps, self.regularization, self.sample_rate_hz
        )
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "design_")
        X = _check_signals(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} channels, expected {self.n_features_in_}"
            )
        estimate = np.zeros(X.shape[0])
        for fir, ref in zip(self.design_.filters, X.T):
            estimate += apply_fir(fir, ref)
        return estimate

    def denoise(self, X, y):
        return column_or_1d(y) - self.predict(X)


class SnswfDenoiser(BaseEstimator):
    """Separation-based Wiener denoiser with a comparative report.

    ``fit(X, y)`` runs the full pipeline on reference columns ``X`` against
    the primary series ``y``; the denoised series, report, and fitted
    transforms are exposed as attributes.  ``predict(X)`` maps new reference
    data through the selected separated components and the fitted filters to
    estimate the cancellable noise.
    """

    def __init__(
        self,
        sample_rate_hz: float = 20.0,
        signal_band_cpm: tuple[float, float] = (2.5, 3.5),
        noise_bands_cpm=None,
        high_freq_threshold_cpm: float = 30.0,
        max_selected: int = 2,
        snr_ceiling_db: float = 0.0,
        n_taps: int = DEFAULT_N_TAPS,
        regularization: float | None = None,
        ar_order: int = 30,
        n_sources: int | None = None,
    ):
        self.sample_rate_hz = sample_rate_hz
        self.signal_band_cpm = signal_band_cpm
        self.noise_bands_cpm = noise_bands_cpm
        self.high_freq_threshold_cpm = high_freq_threshold_cpm
        self.max_selected = max_selected
        self.snr_ceiling_db = snr_ceiling_db
        self.n_taps = n_taps
        self.regularization = regularization
        self.ar_order = ar_order
        self.n_sources = n_sources

    def _record(self, X, y) -> MultichannelRecord:
        channels = (ChannelMeta("primary"),) + tuple(
            ChannelMeta(f"ref_{i}") for i in range(X.shape[1])
        )
        return MultichannelRecord(
            self.sample_rate_hz, channels, np.vstack([y, X.T])
        )

    def fit(self, X, y):
        X = _check_signals(X)
        y = column_or_1d(y)
        if len(y) != X.shape[0]:
            raise ValueError(f"X has {X.shape[0]} samples but y has {len(y)}")
        policy = SelectionPolicy(
            signal_band_cpm=tuple(self.signal_band_cpm),
            noise_bands_cpm=self.noise_bands_cpm,
            high_freq_threshold_cpm=self.high_freq_threshold_cpm,
            max_selected=self.max_selected,
            snr_ceiling_db=self.snr_ceiling_db,
        )
        result = run_snswf(
            self._record(X, y),
            "primary",
            policy=policy,
            wiener_config=WienerConfig(self.n_taps, self.regularization),
            spectral_config=SpectralConfig(ar_order=self.ar_order),
            n_sources=self.n_sources,
        )
        self.report_ = result.report
        self.denoised_ = result.denoised
        self.design_ = result.design
        self.unmixing_ = result.separation.unmixing
        self.selected_components_ = list(result.report.selected_components)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "design_")
        X = _check_signals(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} channels, expected {self.n_features_in_}"
            )
        Xc = X.T - X.T.mean(axis=1, keepdims=True)
        sources = self.unmixing_[self.selected_components_] @ Xc
        estimate = np.zeros(X.shape[0])
        for fir, src in zip(self.design_.filters, sources):
            estimate += apply_fir(fir, src)
        return estimate

    def denoise(self, X, y):
        y = column_or_1d(y)
        return (y - y.mean()) - self.predict(X)
