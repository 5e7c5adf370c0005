"""Second-order blind identification: whitening plus joint diagonalization
of time-lagged covariance matrices.

The separation model is x(t) = A s(t) with spatially uncorrelated sources
distinguished by their autocovariance profiles.  Estimation steps: noise
variance from the zero-lag covariance eigenvalue floor, whitening of the
retained subspace, cyclic-Jacobi joint diagonalization of the lagged
covariances of the whitened data, then source/mixing recovery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_channel_matrix
from .exceptions import DegenerateWhiteningError

#: Eigenvalue gap (relative to the largest eigenvalue) below which
#: whitening is considered degenerate.
EIG_GAP_RTOL = 1e-12

DEFAULT_N_LAGS = 10
DEFAULT_MAX_LAG_S = 1.0
DEFAULT_JD_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 100


@dataclass
class WhiteningResult:
    whitened: np.ndarray        # (n_sources, n_samples)
    whitener: np.ndarray        # (n_sources, n_channels)
    noise_variance: float
    eigenvalues: np.ndarray     # all eigenvalues of C(0), descending


@dataclass
class JointDiagResult:
    rotation: np.ndarray        # orthogonal (n, n)
    converged: bool
    n_sweeps: int


@dataclass
class SeparationResult:
    """Separated sources with the transforms that produced them.

    ``sources`` rows are ordered by descending variance; the sign of each
    mixing column is fixed so its largest-magnitude entry is positive.
    ``sources == unmixing @ X`` for the matrix X passed at fit time.
    """

    sources: np.ndarray         # (n_sources, n_samples)
    mixing: np.ndarray          # (n_channels, n_sources)
    unmixing: np.ndarray        # (n_sources, n_channels)
    whitener: np.ndarray        # (n_sources, n_channels)
    noise_variance: float
    lags_s: tuple[float, ...]
    sample_rate_hz: float
    converged: bool = True
    n_sweeps: int = 0

    @property
    def n_sources(self) -> int:
        return self.sources.shape[0]


def sample_covariance(X, lag_samples: int) -> np.ndarray:
    """Symmetrized lagged covariance C(tau) = (1/(T-tau)) sum x(t+tau) x(t)^T.

    Row means are subtracted internally, and the estimate is symmetrized
    as (C + C^T)/2, so C(0) is positive semidefinite.
    """
    X = as_channel_matrix(X, "X")
    lag = int(lag_samples)
    if lag < 0:
        raise ValueError("lag_samples must be >= 0")
    T = X.shape[1]
    if lag >= T:
        raise ValueError(f"lag_samples={lag} must be < n_samples={T}")
    Xd = X - X.mean(axis=1, keepdims=True)
    C = Xd[:, lag:] @ Xd[:, : T - lag].T / (T - lag)
    return 0.5 * (C + C.T)


def whiten(X, n_sources: int) -> WhiteningResult:
    """Noise-adjusted whitening from the zero-lag covariance.

    The noise variance is the mean of the (n_channels - n_sources)
    smallest eigenvalues of C(0), or 0 when no noise subspace remains.
    Retained directions are scaled by (eigenvalue - noise_variance)^(-1/2).
    """
    X = as_channel_matrix(X, "X")
    n_channels = X.shape[0]
    if not 1 <= n_sources <= n_channels:
        raise ValueError(f"n_sources must be in [1, {n_channels}], got {n_sources}")
    C0 = sample_covariance(X, 0)
    eigvals, eigvecs = np.linalg.eigh(C0)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    if n_sources == n_channels:
        noise_variance = 0.0
    else:
        noise_variance = float(np.mean(eigvals[n_sources:]))
    gaps = eigvals[:n_sources] - noise_variance
    floor = EIG_GAP_RTOL * max(eigvals[0], 0.0)
    if np.any(gaps <= floor):
        raise DegenerateWhiteningError(
            f"retained eigenvalue within {floor:g} of the noise floor "
            f"(eigenvalues {eigvals[:n_sources]}, noise variance {noise_variance:g})"
        )
    whitener = (gaps ** -0.5)[:, None] * eigvecs[:, :n_sources].T
    return WhiteningResult(
        whitened=whitener @ X,
        whitener=whitener,
        noise_variance=noise_variance,
        eigenvalues=eigvals,
    )


def joint_diagonalize(
    matrices,
    tol: float = DEFAULT_JD_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> JointDiagResult:
    """Orthogonal joint diagonalizer via cyclic Jacobi sweeps.

    Each sweep visits index pairs (p < q) in lexicographic order and applies
    the closed-form Givens rotation maximizing the summed squared diagonals.
    Convergence: no single rotation in a sweep lowers the off-diagonal
    criterion by more than tol * sum of squared Frobenius norms.  Exceeding
    ``max_sweeps`` is reported through ``converged``, not an exception.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mats = [np.asarray(M, dtype=float) for M in matrices]
    if not mats:
        raise ValueError("need at least one matrix")
    n = mats[0].shape[0]
    for M in mats:
        if M.ndim != 2 or M.shape != (n, n):
            raise ValueError(f"matrices must all be {n}x{n}, got {M.shape}")
    A = np.stack([0.5 * (M + M.T) for M in mats])
    U = np.eye(n)
    total = float(np.sum(A**2))
    if n == 1 or total == 0.0:
        return JointDiagResult(rotation=U, converged=True, n_sweeps=0)

    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        worst_gain = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                d = A[:, p, p] - A[:, q, q]
                o = A[:, p, q] + A[:, q, p]
                g_dd = float(np.dot(d, d))
                g_oo = float(np.dot(o, o))
                g_do = float(np.dot(d, o))
                ton = g_dd - g_oo
                toff = 2.0 * g_do
                theta = 0.5 * math.atan2(toff, ton + math.hypot(ton, toff))
                c, s = math.cos(theta), math.sin(theta)
                # Off-criterion decrease achieved by this rotation.
                s2, c2 = math.sin(2 * theta), math.cos(2 * theta)
                gain = 0.5 * (
                    g_oo - (s2 * s2 * g_dd - 2.0 * s2 * c2 * g_do + c2 * c2 * g_oo)
                )
                worst_gain = max(worst_gain, gain)
                if s != 0.0:
                    col_p = A[:, :, p].copy()
                    col_q = A[:, :, q].copy()
                    A[:, :, p] = c * col_p + s * col_q
                    A[:, :, q] = c * col_q - s * col_p
                    row_p = A[:, p, :].copy()
                    row_q = A[:, q, :].copy()
                    A[:, p, :] = c * row_p + s * row_q
                    A[:, q, :] = c * row_q - s * row_p
                    u_p = U[:, p].copy()
                    U[:, p] = c * u_p + s * U[:, q]
                    U[:, q] = c * U[:, q] - s * u_p
        if worst_gain <= tol * total:
            converged = True
            break
    return JointDiagResult(rotation=U, converged=converged, n_sweeps=sweeps)


def default_lags_s(n_lags: int = DEFAULT_N_LAGS, max_lag_s: float = DEFAULT_MAX_LAG_S):
    """Equally spaced lag grid {k * max_lag_s / n_lags, k = 1..n_lags}."""
    if n_lags < 1 or max_lag_s <= 0:
        raise ValueError("need n_lags >= 1 and max_lag_s > 0")
    return tuple(k * max_lag_s / n_lags for k in range(1, n_lags + 1))


def _lags_to_samples(lags_s, sample_rate_hz: float, n_samples: int) -> list[int]:
    lag_samples: list[int] = []
    for lag in lags_s:
        k = int(round(lag * sample_rate_hz))
        if k < 1 or k >= n_samples / 4:
            raise ValueError(
                f"lag {lag} s rounds to {k} samples; must round to >= 1 and "
                f"< n_samples/4 = {n_samples / 4:g}"
            )
        if k not in lag_samples:  # duplicates after rounding collapse silently
            lag_samples.append(k)
    return lag_samples


def sobi(
    X,
    sample_rate_hz: float,
    lags_s=None,
    n_sources: int | None = None,
    tol: float = DEFAULT_JD_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> SeparationResult:
    """Separate sources from a (n_channels, n_samples) matrix.

    ``lags_s`` defaults to 10 equally spaced lags up to 1 s; lags are
    rounded to whole samples and deduplicated, and the realized values are
    recorded in the result.  ``n_sources`` defaults to n_channels.
    """
    X = as_channel_matrix(X, "X")
    n_channels, n_samples = X.shape
    if sample_rate_hz <= 0:
        raise ValueError("sample_rate_hz must be positive")
    if n_sources is None:
        n_sources = n_channels
    lag_samples = _lags_to_samples(
        default_lags_s() if lags_s is None else lags_s, sample_rate_hz, n_samples
    )

    white = whiten(X, n_sources)
    covs = [sample_covariance(white.whitened, k) for k in lag_samples]
    jd = joint_diagonalize(covs, tol=tol, max_sweeps=max_sweeps)
    U = jd.rotation

    unmixing = U.T @ white.whitener
    mixing = np.linalg.pinv(white.whitener) @ U
    sources = unmixing @ X

    # Deterministic presentation: order components by descending variance,
    # then make each mixing column's largest-magnitude entry positive.
    order = np.argsort(-np.var(sources, axis=1), kind="stable")
    sources = sources[order]
    unmixing = unmixing[order]
    mixing = mixing[:, order]
    for j in range(mixing.shape[1]):
        if mixing[np.argmax(np.abs(mixing[:, j])), j] < 0:
            mixing[:, j] *= -1.0
            unmixing[j] *= -1.0
            sources[j] *= -1.0

    return SeparationResult(
        sources=sources,
        mixing=mixing,
        unmixing=unmixing,
        whitener=white.whitener,
        noise_variance=white.noise_variance,
        lags_s=tuple(k / sample_rate_hz for k in lag_samples),
        sample_rate_hz=float(sample_rate_hz),
        converged=jd.converged,
        n_sweeps=jd.n_sweeps,
    )
