"""Multichannel time-series container, CSV persistence, and preprocessing.

The on-disk format is a plain CSV with header ``time,<name1>,<name2>,...``
and one decimal row per sample.  An optional comment line
``# sample_rate_hz=<v>`` is honored when present and cross-checked against
the time column.  Numbers are written with 17 significant digits so that
float64 values round-trip exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from ._validation import as_channel_matrix
from .exceptions import CsvFormatError, CsvParseError

#: Relative tolerance for declaring the time grid uniform.
TIME_GRID_RTOL = 1e-6

#: printf-style format giving lossless float64 text round-trips.
CSV_FLOAT_FORMAT = "%.17g"


class ChannelKind(Enum):
    """Role of a sensor channel within a record."""

    SIGNAL_GRADIOMETER = "signal_gradiometer"
    MAGNETOMETER = "magnetometer"
    TENSOR_GRADIOMETER = "tensor_gradiometer"
    DERIVED = "derived"


@dataclass(frozen=True)
class ChannelMeta:
    """Per-channel metadata: unique name, sensor kind, and units label."""

    name: str
    kind: ChannelKind = ChannelKind.DERIVED
    units: str = "arb"

    def __post_init__(self):
        if not self.name:
            raise ValueError("channel name must be nonempty")


@dataclass
class MultichannelRecord:
    """Uniformly sampled multichannel series, shape (n_channels, n_samples)."""

    sample_rate_hz: float
    channels: tuple[ChannelMeta, ...]
    data: np.ndarray

    def __post_init__(self):
        self.channels = tuple(self.channels)
        self.data = as_channel_matrix(self.data, "data")
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if self.data.shape[0] != len(self.channels):
            raise ValueError(
                f"data has {self.data.shape[0]} rows but {len(self.channels)} channels"
            )
        if self.data.shape[1] < 2:
            raise ValueError("record needs at least 2 samples")
        names = [c.name for c in self.channels]
        if len(set(names)) != len(names):
            raise ValueError("channel names must be unique")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sample_rate_hz

    def channel_names(self) -> list[str]:
        return [c.name for c in self.channels]

    def channel_index(self, name: str) -> int:
        for i, meta in enumerate(self.channels):
            if meta.name == name:
                return i
        raise ValueError(f"no channel named {name!r}; available: {self.channel_names()}")

    def channel(self, name: str) -> np.ndarray:
        """Return one channel as a 1-D view."""
        return self.data[self.channel_index(name)]

    def select(self, names: list[str]) -> "MultichannelRecord":
        """Return a record restricted to the named channels, in the given order."""
        idx = [self.channel_index(n) for n in names]
        return MultichannelRecord(
            self.sample_rate_hz,
            tuple(self.channels[i] for i in idx),
            self.data[idx].copy(),
        )

    def with_data(self, data: np.ndarray) -> "MultichannelRecord":
        return replace(self, data=np.array(data, dtype=float))


def demean(rec: MultichannelRecord) -> MultichannelRecord:
    """Subtract each channel's sample mean."""
    return rec.with_data(rec.data - rec.data.mean(axis=1, keepdims=True))


def _lowpass_taps(factor: int) -> np.ndarray:
    """Windowed-sinc anti-alias filter: 8*factor+1 taps, Hamming window,
    cutoff at 0.8x the post-decimation Nyquist, unit DC gain."""
    n_taps = 8 * factor + 1
    cutoff = 0.8 / (2.0 * factor)  # cycles per input sample
    m = np.arange(n_taps) - (n_taps - 1) / 2.0
    taps = 2.0 * cutoff * np.sinc(2.0 * cutoff * m) * np.hamming(n_taps)
    return taps / taps.sum()


def decimate(rec: MultichannelRecord, factor: int) -> MultichannelRecord:
    """Integer-factor downsampling with a linear-phase FIR anti-alias filter.

    The filter is applied zero-phase via edge-reflection padding, so output
    sample k corresponds to input time index k*factor.  Output length is
    floor(n_samples / factor).
    """
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor!r}")
    factor = int(factor)
    if factor == 1:
        return rec.with_data(rec.data)
    if rec.n_samples < 8 * factor:
        raise ValueError(
            f"need at least {8 * factor} samples to decimate by {factor}, got {rec.n_samples}"
        )
    taps = _lowpass_taps(factor)
    half = (len(taps) - 1) // 2
    padded = np.pad(rec.data, ((0, 0), (half, half)), mode="reflect")
    smoothed = np.empty_like(rec.data)
    for i in range(rec.n_channels):
        smoothed[i] = np.convolve(padded[i], taps, mode="valid")
    n_out = rec.n_samples // factor
    out = smoothed[:, ::factor][:, :n_out]
    return MultichannelRecord(rec.sample_rate_hz / factor, rec.channels, out)


def save_csv(rec: MultichannelRecord, path) -> None:
    """Write a record as CSV: rate comment, header, one row per sample."""
    path = Path(path)
    names = rec.channel_names()
    times = rec.times()
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"# sample_rate_hz={CSV_FLOAT_FORMAT % rec.sample_rate_hz}\n")
        fh.write("time," + ",".join(names) + "\n")
        for j in range(rec.n_samples):
            row = [CSV_FLOAT_FORMAT % times[j]]
            row.extend(CSV_FLOAT_FORMAT % v for v in rec.data[:, j])
            fh.write(",".join(row) + "\n")


def _parse_cell(text: str, line_no: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CsvParseError(f"cannot parse {text!r} as a number", line_no, column) from None
    if not math.isfinite(value):
        raise CsvParseError(f"non-finite value {text!r}", line_no, column)
    return value


def load_csv(path, sample_rate_hz: float | None = None) -> MultichannelRecord:
    """Read a record CSV written by :func:`save_csv` (or compatible).

    The sample rate is inferred from the time column (median delta, asserted
    uniform to 1e-6 relative).  A ``# sample_rate_hz=`` comment, when present,
    is cross-checked against the time column and then used verbatim.  Files
    without a leading ``time`` column are accepted only when an explicit
    ``sample_rate_hz`` is supplied.
    """
    path = Path(path)
    declared = None
    header: list[str] | None = None
    rows: list[list[float]] = []
    row_lines: list[int] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("sample_rate_hz="):
                    declared = _parse_cell(
                        body.split("=", 1)[1], line_no, "sample_rate_hz"
                    )
                continue
            if header is None:
                header = [field.strip() for field in line.split(",")]
                if not header or any(not h for h in header):
                    raise CsvParseError("empty header field", line_no)
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise CsvParseError(
                    f"expected {len(header)} fields, got {len(cells)}", line_no
                )
            rows.append(
                [_parse_cell(c, line_no, header[k]) for k, c in enumerate(cells)]
            )
            row_lines.append(line_no)
    if header is None:
        raise CsvFormatError(f"{path}: no header row found")
    if len(rows) < 2:
        raise CsvFormatError(f"{path}: need at least 2 data rows, got {len(rows)}")

    table = np.array(rows, dtype=float)
    has_time = header[0] == "time"
    if has_time:
        names = header[1:]
        data = table[:, 1:].T
        t = table[:, 0]
        dt = np.diff(t)
        med = float(np.median(dt))
        if med <= 0:
            raise CsvFormatError(f"{path}: time column is not increasing")
        if np.max(np.abs(dt - med)) > TIME_GRID_RTOL * med:
            raise CsvFormatError(f"{path}: time grid is not uniform within {TIME_GRID_RTOL:g} relative")
        inferred = 1.0 / med
        rate = inferred
        if declared is not None:
            if abs(declared - inferred) > TIME_GRID_RTOL * declared:
                raise CsvFormatError(
                    f"{path}: declared sample_rate_hz={declared:g} disagrees with "
                    f"time column ({inferred:g})"
                )
            rate = declared
        if sample_rate_hz is not None:
            if abs(sample_rate_hz - rate) > TIME_GRID_RTOL * sample_rate_hz:
                raise CsvFormatError(
                    f"{path}: requested sample_rate_hz={sample_rate_hz:g} disagrees "
                    f"with file ({rate:g})"
                )
            rate = sample_rate_hz
    else:
        if sample_rate_hz is None and declared is None:
            raise CsvFormatError(
                f"{path}: no 'time' column; supply sample_rate_hz explicitly"
            )
        names = header
        data = table.T
        rate = sample_rate_hz if sample_rate_hz is not None else declared

    if not names:
        raise CsvFormatError(f"{path}: no data channels in header")
    metas = tuple(ChannelMeta(name=n) for n in names)
    return MultichannelRecord(float(rate), metas, data)
