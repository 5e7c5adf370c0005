"""Time-domain multichannel Wiener filtering and its spectral theory.

The designed filters solve the regularized normal equations
``(R + lambda I) H = b`` where R is the block matrix of lagged reference
correlations ((i, j) block Toeplitz in r_{x_i x_j}) and b stacks the
primary/reference cross-correlations.  Correlations use the biased
(divide-by-T) estimator, which keeps R positive semidefinite, so any
``lambda > 0`` makes the system solvable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import as_series
from .exceptions import SingularSpectrumError, SingularSystemError

DEFAULT_N_TAPS = 40
#: Default Tikhonov damping, as a fraction of the largest zero-lag
#: reference power.  Small enough to leave well-conditioned designs
#: unchanged beyond ~1e-5, large enough to keep contaminated-reference
#: baselines solvable.
DEFAULT_REG_SCALE = 1e-6


@dataclass(frozen=True)
class FirFilter:
    """Causal FIR filter: taps h(0..N-1) applied at a fixed sample rate."""

    taps: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        taps = np.atleast_1d(np.asarray(self.taps, dtype=float))
        if taps.ndim != 1 or taps.size < 1:
            raise ValueError("taps must be a nonempty 1-D array")
        if not np.all(np.isfinite(taps)):
            raise ValueError("taps must be finite")
        object.__setattr__(self, "taps", taps)

    @property
    def n_taps(self) -> int:
        return self.taps.size


@dataclass(frozen=True)
class CorrelationSet:
    """Biased correlation estimates needed to design an N-tap filter bank.

    ``autocorr[i, j, N-1+k]`` holds r_{x_i x_j}(k) for k in -(N-1)..N-1,
    with r_{x_i x_j}(-k) = r_{x_j x_i}(k).  ``crosscorr[i, k]`` holds
    r_{x_i d}(k) = E[d(n) x_i(n-k)] for k in 0..N-1.
    """

    autocorr: np.ndarray   # (M, M, 2N-1)
    crosscorr: np.ndarray  # (M, N)
    n_taps: int
    sample_rate_hz: float

    def __post_init__(self):
        auto = np.asarray(self.autocorr, dtype=float)
        cross = np.asarray(self.crosscorr, dtype=float)
        N = self.n_taps
        if auto.ndim != 3 or auto.shape[0] != auto.shape[1] or auto.shape[2] != 2 * N - 1:
            raise ValueError(f"autocorr must be (M, M, {2 * N - 1}), got {auto.shape}")
        if cross.shape != (auto.shape[0], N):
            raise ValueError(f"crosscorr must be ({auto.shape[0]}, {N}), got {cross.shape}")
        if not np.allclose(auto, auto[...].transpose(1, 0, 2)[:, :, ::-1], atol=1e-12):
            raise ValueError("autocorr violates r_ij(k) == r_ji(-k)")
        zero_lag = auto[np.arange(auto.shape[0]), np.arange(auto.shape[0]), N - 1]
        peak = np.abs(auto[np.arange(auto.shape[0]), np.arange(auto.shape[0]), :]).max(axis=1)
        if np.any(zero_lag + 1e-12 * np.maximum(peak, 1.0) < peak):
            raise ValueError("autocorr violates r_ii(0) >= |r_ii(k)|")
        object.__setattr__(self, "autocorr", auto)
        object.__setattr__(self, "crosscorr", cross)

    @property
    def n_references(self) -> int:
        return self.autocorr.shape[0]

    def max_zero_lag_power(self) -> float:
        M, N = self.n_references, self.n_taps
        return float(self.autocorr[np.arange(M), np.arange(M), N - 1].max())


@dataclass(frozen=True)
class WienerDesign:
    """One FIR filter per reference plus the solve diagnostics."""

    filters: tuple[FirFilter, ...]
    regularization: float
    condition_estimate: float

    def __post_init__(self):
        if not self.filters:
            raise ValueError("filters must be nonempty")
        lengths = {f.n_taps for f in self.filters}
        if len(lengths) != 1:
            raise ValueError("all filters must have equal length")

    @property
    def n_taps(self) -> int:
        return self.filters[0].n_taps


@dataclass(frozen=True)
class TransferSpec:
    """Pointwise spectral description of a noise-canceller input path.

    The primary input receives the signal and noise directly; the reference
    input receives them through ``signal_transfer`` and ``noise_transfer``.
    All arrays are aligned on ``freqs_hz``.
    """

    freqs_hz: np.ndarray
    signal_transfer: np.ndarray   # complex response carrying the signal
    noise_transfer: np.ndarray    # complex response carrying the noise
    signal_spectrum: np.ndarray   # nonnegative signal power density
    noise_spectrum: np.ndarray    # nonnegative noise power density

    def __post_init__(self):
        freqs = np.asarray(self.freqs_hz, dtype=float)
        sig_t = np.asarray(self.signal_transfer, dtype=complex)
        noi_t = np.asarray(self.noise_transfer, dtype=complex)
        sig_s = np.asarray(self.signal_spectrum, dtype=float)
        noi_s = np.asarray(self.noise_spectrum, dtype=float)
        for name, arr in (
            ("signal_transfer", sig_t),
            ("noise_transfer", noi_t),
            ("signal_spectrum", sig_s),
            ("noise_spectrum", noi_s),
        ):
            if arr.shape != freqs.shape:
                raise ValueError(f"{name} must match freqs_hz shape {freqs.shape}")
        if np.any(sig_s < 0) or np.any(noi_s < 0):
            raise ValueError("spectra must be nonnegative")
        object.__setattr__(self, "freqs_hz", freqs)
        object.__setattr__(self, "signal_transfer", sig_t)
        object.__setattr__(self, "noise_transfer", noi_t)
        object.__setattr__(self, "signal_spectrum", sig_s)
        object.__setattr__(self, "noise_spectrum", noi_s)


@dataclass(frozen=True)
class SnrDensities:
    """Signal-to-noise density ratios at the canceller output and reference input."""

    output_density: np.ndarray
    reference_density: np.ndarray


def correlate(x, y, max_lag: int) -> np.ndarray:
    """Biased cross-correlation r(k) = (1/T) sum_{n=k}^{T-1} x(n) y(n-k).

    Both series are demeaned internally.  Returns lags k = 0..max_lag.
    """
    x = as_series(x, "x")
    y = as_series(y, "y")
    if len(x) != len(y):
        raise ValueError(f"series lengths differ: {len(x)} vs {len(y)}")
    T = len(x)
    if not 0 <= max_lag < T:
        raise ValueError(f"max_lag must be in [0, {T - 1}], got {max_lag}")
    x = x - x.mean()
    y = y - y.mean()
    r = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        r[k] = np.dot(x[k:], y[: T - k]) / T
    return r


def estimate_correlations(refs, d, n_taps: int, sample_rate_hz: float = 1.0) -> CorrelationSet:
    """Estimate every auto/cross correlation an N-tap design needs."""
    refs = np.atleast_2d(np.asarray(refs, dtype=float))
    d = as_series(d, "d")
    if n_taps < 1:
        raise ValueError("n_taps must be >= 1")
    M, T = refs.shape
    if T != len(d):
        raise ValueError(f"reference length {T} != primary length {len(d)}")
    N = n_taps
    pos = np.empty((M, M, N))
    for i in range(M):
        for j in range(M):
            pos[i, j] = correlate(refs[i], refs[j], N - 1)
    auto = np.empty((M, M, 2 * N - 1))
    auto[:, :, N - 1 :] = pos
    auto[:, :, : N - 1] = pos.transpose(1, 0, 2)[:, :, :0:-1]
    cross = np.stack([correlate(d, refs[i], N - 1) for i in range(M)])
    return CorrelationSet(
        autocorr=auto, crosscorr=cross, n_taps=N, sample_rate_hz=float(sample_rate_hz)
    )


def default_regularization(corr: CorrelationSet) -> float:
    """lambda = 1e-6 * max_i r_{x_i x_i}(0)."""
    return DEFAULT_REG_SCALE * corr.max_zero_lag_power()


def solve_wiener(corr: CorrelationSet, regularization: float) -> WienerDesign:
    """Solve (R + lambda I) H = b for the joint multichannel filter bank.

    Uses a symmetric positive-definite (Cholesky) factorization; failure
    raises :class:`SingularSystemError` suggesting larger regularization.
    """
    if regularization < 0 or not np.isfinite(regularization):
        raise ValueError("regularization must be finite and >= 0")
    M, N = corr.n_references, corr.n_taps
    A = np.empty((M * N, M * N))
    for i in range(M):
        for j in range(M):
            seq = corr.autocorr[i, j]
            block = scipy.linalg.toeplitz(seq[N - 1 :: -1], seq[N - 1 :])
            A[i * N : (i + 1) * N, j * N : (j + 1) * N] = block
    A = 0.5 * (A + A.T)
    A[np.diag_indices_from(A)] += regularization
    b = corr.crosscorr.reshape(M * N)
    if not np.all(np.isfinite(A)):
        raise ValueError("correlation system contains non-finite values")
    try:
        factor = scipy.linalg.cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"normal equations not positive definite ({exc}); increase regularization"
        ) from exc
    h = scipy.linalg.cho_solve(factor, b)
    condition = float(np.linalg.cond(A))
    filters = tuple(
        FirFilter(taps=h[i * N : (i + 1) * N], sample_rate_hz=corr.sample_rate_hz)
        for i in range(M)
    )
    return WienerDesign(
        filters=filters, regularization=float(regularization), condition_estimate=condition
    )


def apply_fir(fir: FirFilter, x) -> np.ndarray:
    """Causal convolution with zero initial conditions; output length == input length."""
    x = as_series(x, "x")
    return np.convolve(x, fir.taps)[: len(x)]


def cancel(design: WienerDesign, refs, d) -> np.ndarray:
    """Residual e(n) = d(n) - sum_i (h_i * x_i)(n)."""
    d = as_series(d, "d")
    refs = np.atleast_2d(np.asarray(refs, dtype=float))
    if refs.shape[0] != len(design.filters):
        raise ValueError(
            f"{refs.shape[0]} references but design has {len(design.filters)} filters"
        )
    if refs.shape[1] != len(d):
        raise ValueError(f"reference length {refs.shape[1]} != primary length {len(d)}")
    estimate = np.zeros_like(d)
    for fir, x in zip(design.filters, refs):
        estimate += apply_fir(fir, x)
    return d - estimate


def design_wiener(
    refs,
    d,
    n_taps: int = DEFAULT_N_TAPS,
    regularization: float | None = None,
    sample_rate_hz: float = 1.0,
) -> WienerDesign:
    """Estimate correlations and solve, applying the default damping when
    ``regularization`` is None."""
    corr = estimate_correlations(refs, d, n_taps, sample_rate_hz)
    lam = default_regularization(corr) if regularization is None else regularization
    return solve_wiener(corr, lam)


def theory_transfer(spec: TransferSpec) -> np.ndarray:
    """Pointwise optimal reference-to-primary transfer on the unit circle.

    h(f) = (S_s conj(G_s) + S_n conj(G_n)) / (S_s |G_s|^2 + S_n |G_n|^2)
    with G_s, G_n the signal/noise reference transfers and S_s, S_n the
    source spectra.
    """
    num = (
        spec.signal_spectrum * np.conj(spec.signal_transfer)
        + spec.noise_spectrum * np.conj(spec.noise_transfer)
    )
    den = (
        spec.signal_spectrum * np.abs(spec.signal_transfer) ** 2
        + spec.noise_spectrum * np.abs(spec.noise_transfer) ** 2
    )
    if np.any(den <= 0):
        raise SingularSpectrumError("transfer denominator vanishes on the grid")
    return num / den


def theory_snr_densities(spec: TransferSpec) -> SnrDensities:
    """Reference-input and output signal-to-noise density ratios.

    ``reference_density = S_s |G_s|^2 / (S_n |G_n|^2)`` and the canceller
    output density is its pointwise reciprocal.
    """
    sig = spec.signal_spectrum * np.abs(spec.signal_transfer) ** 2
    noi = spec.noise_spectrum * np.abs(spec.noise_transfer) ** 2
    if np.any(sig <= 0) or np.any(noi <= 0):
        raise SingularSpectrumError("densities require strictly positive spectra and transfers")
    return SnrDensities(output_density=noi / sig, reference_density=sig / noi)
