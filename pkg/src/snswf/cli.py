"""Command-line front end: simulate, sobi, psd, denoise.

All outputs are files; stdout carries a one-line summary plus the path of
the primary output.  Exit codes: 0 success, 2 usage/configuration error,
3 numerical/runtime failure.  Every command accepts ``--config FILE`` with
flat ``key=value`` lines; explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import SnswfError
from .pipeline import (
    SelectionPolicy,
    WienerConfig,
    run_classic,
    run_snswf,
)
from .records import ChannelMeta, MultichannelRecord, load_csv, save_csv, CSV_FLOAT_FORMAT
from .simulate import BackgroundModel, SimulationConfig, synth_simulation
from .sobi import default_lags_s, sobi
from .spectral import SpectralConfig, fit_psd, snr_db
from .wiener import DEFAULT_N_TAPS

SCHEMA_VERSION = 1


def _parse_band(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except Exception:
        raise ValueError(f"band must look like 'lo:hi', got {text!r}") from None


def _parse_bands(text: str) -> tuple[tuple[float, float], ...]:
    return tuple(_parse_band(part) for part in text.split(",") if part)


@dataclass(frozen=True)
class Option:
    """One config key: flag name, type converter, default, and help text."""

    key: str
    type: object
    default: object
    help: str


SIMULATE_OPTIONS = [
    Option("f_signal_cpm", float, 3.0, "signal tone frequency (cpm)"),
    Option("f_noise_cpm", float, 0.3, "interference tone frequency (cpm)"),
    Option("signal_coupling", float, 0.1, "tone gain into the signal channel"),
    Option("magnetometer_coupling", float, 1.0, "tone gain into magnetometer references"),
    Option("gradiometer_coupling", float, 0.1, "tone gain into gradiometer references"),
    Option("duration_s", float, 120.0, "record length in seconds"),
    Option("sample_rate_hz", float, 20.0, "sampling rate in Hz"),
    Option("white_std", float, 3e-4, "white background std (gradiometer scale)"),
    Option("pink_std", float, 5e-5, "1/f^a background std (gradiometer scale)"),
    Option("pink_exponent", float, 1.0, "background spectral exponent a"),
    Option(
        "magnetometer_background_gain", float, 10.0,
        "magnetometer background amplitude relative to gradiometers",
    ),
    Option("seed", int, 0, "random seed for the backgrounds"),
]

SOBI_OPTIONS = [
    Option("n_lags", int, 10, "number of covariance lags"),
    Option("max_lag_s", float, 1.0, "largest covariance lag in seconds"),
    Option("n_sources", int, None, "sources to retain (default: all channels)"),
    Option("jd_tol", float, 1e-8, "joint diagonalization tolerance"),
    Option("max_sweeps", int, 100, "joint diagonalization sweep cap"),
]

SPECTRAL_OPTIONS = [
    Option("ar_order", int, 30, "autoregressive model order"),
    Option("grid_max_cpm", float, 70.0, "top of the PSD grid (cpm)"),
    Option("grid_step_cpm", float, 0.1, "PSD grid step (cpm)"),
]

BAND_OPTIONS = [
    Option("signal_band", _parse_band, (2.5, 3.5), "signal band as lo:hi in cpm"),
    Option(
        "noise_bands", _parse_bands, None,
        "noise bands as lo:hi[,lo:hi...] in cpm (default: complement of the signal band)",
    ),
]

POLICY_OPTIONS = BAND_OPTIONS + [
    Option("high_freq_threshold_cpm", float, 30.0, "high-frequency noise threshold (cpm)"),
    Option("max_selected", int, 2, "maximum selected reference components"),
    Option("snr_ceiling_db", float, 0.0, "selection SNR ceiling (dB)"),
]

WIENER_OPTIONS = [
    Option("n_taps", int, DEFAULT_N_TAPS, "FIR taps per reference"),
    Option(
        "regularization", float, None,
        "Tikhonov damping (default: 1e-6 x largest reference power)",
    ),
]

ALL_KEYS = {
    opt.key
    for opts in (SIMULATE_OPTIONS, SOBI_OPTIONS, SPECTRAL_OPTIONS, POLICY_OPTIONS, WIENER_OPTIONS)
    for opt in opts
} | {"signal_channel", "reference_channels", "method"}


def _load_config_file(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    values: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in ALL_KEYS:
            raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def _add_options(parser: argparse.ArgumentParser, options: list[Option]) -> None:
    for opt in options:
        flag = "--" + opt.key.replace("_", "-")
        if opt.default is None:
            shown = "auto"
        elif isinstance(opt.default, tuple) and all(
            isinstance(b, tuple) for b in opt.default
        ):
            shown = ",".join(f"{lo:g}:{hi:g}" for lo, hi in opt.default)
        elif isinstance(opt.default, tuple):
            shown = f"{opt.default[0]:g}:{opt.default[1]:g}"
        else:
            shown = f"{opt.default:g}" if isinstance(opt.default, float) else str(opt.default)
        parser.add_argument(
            flag,
            dest=opt.key,
            default=None,
            metavar="V",
            help=f"{opt.help} (default: {shown})",
        )


def _resolve(args, options: list[Option], file_values: dict[str, str]) -> dict:
    resolved = {}
    for opt in options:
        raw = getattr(args, opt.key, None)
        if raw is None and opt.key in file_values:
            raw = file_values[opt.key]
        if raw is None:
            resolved[opt.key] = opt.default
        else:
            resolved[opt.key] = opt.type(raw) if isinstance(raw, str) else raw
    return resolved


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_matrix(path: Path, matrix: np.ndarray) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for row in np.atleast_2d(matrix):
            fh.write(",".join(CSV_FLOAT_FORMAT % v for v in row) + "\n")


def _sources_record(sources: np.ndarray, sample_rate_hz: float) -> MultichannelRecord:
    metas = tuple(ChannelMeta(f"source_{i + 1}") for i in range(sources.shape[0]))
    return MultichannelRecord(sample_rate_hz, metas, sources)


def _policy_from(resolved: dict, sample_rate_hz: float) -> SelectionPolicy:
    return SelectionPolicy(
        signal_band_cpm=tuple(resolved["signal_band"]),
        noise_bands_cpm=resolved["noise_bands"],
        high_freq_threshold_cpm=resolved["high_freq_threshold_cpm"],
        max_selected=resolved["max_selected"],
        snr_ceiling_db=resolved["snr_ceiling_db"],
    )


def cmd_simulate(args) -> int:
    file_values = _load_config_file(args.config)
    cfg_values = _resolve(args, SIMULATE_OPTIONS, file_values)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = SimulationConfig(
        f_signal_cpm=cfg_values["f_signal_cpm"],
        f_noise_cpm=cfg_values["f_noise_cpm"],
        signal_coupling=cfg_values["signal_coupling"],
        magnetometer_coupling=cfg_values["magnetometer_coupling"],
        gradiometer_coupling=cfg_values["gradiometer_coupling"],
        duration_s=cfg_values["duration_s"],
        sample_rate_hz=cfg_values["sample_rate_hz"],
        background=BackgroundModel(
            white_std=cfg_values["white_std"],
            pink_std=cfg_values["pink_std"],
            pink_exponent=cfg_values["pink_exponent"],
        ),
        magnetometer_background_gain=cfg_values["magnetometer_background_gain"],
        seed=cfg_values["seed"],
    )
    record = synth_simulation(cfg)
    record_path = out_dir / "record.csv"
    save_csv(record, record_path)
    truth = {"schema_version": SCHEMA_VERSION}
    truth.update(cfg_values)
    truth["channels"] = record.channel_names()
    truth["channel_kinds"] = [c.kind.value for c in record.channels]
    _write_json(out_dir / "truth.json", truth)
    print(
        f"simulate: wrote {record.n_channels} channels x {record.n_samples} samples "
        f"at {record.sample_rate_hz:g} Hz -> {record_path}"
    )
    return 0


def cmd_sobi(args) -> int:
    file_values = _load_config_file(args.config)
    values = _resolve(args, SOBI_OPTIONS, file_values)
    record = load_csv(args.record)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = sobi(
        record.data - record.data.mean(axis=1, keepdims=True),
        record.sample_rate_hz,
        lags_s=default_lags_s(values["n_lags"], values["max_lag_s"]),
        n_sources=values["n_sources"],
        tol=values["jd_tol"],
        max_sweeps=values["max_sweeps"],
    )
    save_csv(_sources_record(result.sources, record.sample_rate_hz), out_dir / "sources.csv")
    _write_matrix(out_dir / "mixing.csv", result.mixing)
    _write_matrix(out_dir / "unmixing.csv", result.unmixing)
    _write_matrix(out_dir / "whitener.csv", result.whitener)
    _write_json(
        out_dir / "sobi.json",
        {
            "schema_version": SCHEMA_VERSION,
            "channels": record.channel_names(),
            "n_sources": result.n_sources,
            "noise_variance": result.noise_variance,
            "lags_s": list(result.lags_s),
            "converged": result.converged,
            "n_sweeps": result.n_sweeps,
            "artifacts": {
                "sources": "sources.csv",
                "mixing": "mixing.csv",
                "unmixing": "unmixing.csv",
                "whitener": "whitener.csv",
            },
        },
    )
    print(
        f"sobi: separated {result.n_sources} components from {record.n_channels} channels "
        f"-> {out_dir / 'sobi.json'}"
    )
    return 0


def cmd_psd(args) -> int:
    file_values = _load_config_file(args.config)
    spectral = _resolve(args, SPECTRAL_OPTIONS, file_values)
    bands = _resolve(args, BAND_OPTIONS, file_values)
    record = load_csv(args.record)
    channel = args.channel or record.channels[0].name
    series = record.channel(channel)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = SpectralConfig(
        ar_order=spectral["ar_order"],
        grid_max_cpm=spectral["grid_max_cpm"],
        grid_step_cpm=spectral["grid_step_cpm"],
    )
    psd = fit_psd(series, record.sample_rate_hz, config)
    signal_band = tuple(bands["signal_band"])
    noise_bands = bands["noise_bands"]
    if noise_bands is None:
        noise_bands = SelectionPolicy(signal_band_cpm=signal_band).resolve_noise_bands(
            record.sample_rate_hz
        )
    result = snr_db(psd, signal_band, noise_bands)
    psd_path = out_dir / "psd.csv"
    with psd_path.open("w", encoding="utf-8") as fh:
        fh.write("freq_cpm,psd\n")
        for f, p in zip(psd.freqs_cpm, psd.psd):
            fh.write(f"{CSV_FLOAT_FORMAT % f},{CSV_FLOAT_FORMAT % p}\n")
    _write_json(
        out_dir / "psd.json",
        {
            "schema_version": SCHEMA_VERSION,
            "channel": channel,
            "sample_rate_hz": record.sample_rate_hz,
            "ar_order": config.ar_order,
            "signal_band_cpm": list(signal_band),
            "noise_bands_cpm": [list(b) for b in noise_bands],
            "snr_db": result.snr_db,
            "signal_peak": {
                "freq_cpm": result.signal_peak.freq_cpm,
                "psd_value": result.signal_peak.psd_value,
            },
            "noise_peak": {
                "freq_cpm": result.noise_peak.freq_cpm,
                "psd_value": result.noise_peak.psd_value,
            },
            "artifacts": {"psd": "psd.csv"},
        },
    )
    print(
        f"psd: channel {channel!r} snr {result.snr_db:.2f} dB "
        f"-> {out_dir / 'psd.json'}"
    )
    return 0


def _denoised_record(series: np.ndarray, name: str, sample_rate_hz: float) -> MultichannelRecord:
    return MultichannelRecord(sample_rate_hz, (ChannelMeta(name),), series[None, :])


def cmd_denoise(args) -> int:
    file_values = _load_config_file(args.config)
    sobi_values = _resolve(args, SOBI_OPTIONS, file_values)
    spectral_values = _resolve(args, SPECTRAL_OPTIONS, file_values)
    policy_values = _resolve(args, POLICY_OPTIONS, file_values)
    wiener_values = _resolve(args, WIENER_OPTIONS, file_values)

    record = load_csv(args.record)
    signal_channel = args.signal_channel or record.channels[0].name
    references = None
    if args.reference_channels:
        references = [n.strip() for n in args.reference_channels.split(",") if n.strip()]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    policy = _policy_from(policy_values, record.sample_rate_hz)
    wiener_config = WienerConfig(
        n_taps=wiener_values["n_taps"], regularization=wiener_values["regularization"]
    )
    spectral_config = SpectralConfig(
        ar_order=spectral_values["ar_order"],
        grid_max_cpm=spectral_values["grid_max_cpm"],
        grid_step_cpm=spectral_values["grid_step_cpm"],
    )

    artifacts: dict[str, str] = {}
    summary: str
    if args.method == "classic":
        classic = run_classic(
            record, signal_channel, references, wiener_config, spectral_config, policy
        )
        save_csv(
            _denoised_record(classic.denoised, "classic", record.sample_rate_hz),
            out_dir / "denoised_classic.csv",
        )
        artifacts["denoised_classic"] = "denoised_classic.csv"
        payload = {
            "schema_version": SCHEMA_VERSION,
            "method": "classic",
            "signal_channel": signal_channel,
            "classic_snr_db": classic.snr_db,
            "artifacts": artifacts,
        }
        _write_json(out_dir / "report.json", payload)
        summary = f"denoise[classic]: snr {classic.snr_db:.2f} dB"
    else:
        result = run_snswf(
            record,
            signal_channel,
            references,
            policy=policy,
            wiener_config=wiener_config,
            spectral_config=spectral_config,
            lags_s=default_lags_s(sobi_values["n_lags"], sobi_values["max_lag_s"]),
            n_sources=sobi_values["n_sources"],
        )
        save_csv(
            _denoised_record(result.denoised, "snswf", record.sample_rate_hz),
            out_dir / "denoised_snswf.csv",
        )
        artifacts["denoised_snswf"] = "denoised_snswf.csv"
        if args.method == "both":
            classic = run_classic(
                record, signal_channel, references, wiener_config, spectral_config, policy
            )
            save_csv(
                _denoised_record(classic.denoised, "classic", record.sample_rate_hz),
                out_dir / "denoised_classic.csv",
            )
            artifacts["denoised_classic"] = "denoised_classic.csv"
        save_csv(
            _sources_record(result.separation.sources, record.sample_rate_hz),
            out_dir / "sources.csv",
        )
        _write_matrix(out_dir / "mixing.csv", result.separation.mixing)
        _write_matrix(out_dir / "unmixing.csv", result.separation.unmixing)
        _write_matrix(out_dir / "whitener.csv", result.separation.whitener)
        artifacts.update(
            {"sources": "sources.csv", "mixing": "mixing.csv",
             "unmixing": "unmixing.csv", "whitener": "whitener.csv"}
        )
        for idx, psd in enumerate(result.psds):
            if psd is None:
                continue
            name = f"psd_component_{idx}.csv"
            with (out_dir / name).open("w", encoding="utf-8") as fh:
                fh.write("freq_cpm,psd\n")
                for f, p in zip(psd.freqs_cpm, psd.psd):
                    fh.write(f"{CSV_FLOAT_FORMAT % f},{CSV_FLOAT_FORMAT % p}\n")
            artifacts[f"psd_component_{idx}"] = name
        taps = np.vstack([f.taps for f in result.design.filters]).T
        _write_matrix(out_dir / "filter_taps.csv", taps)
        artifacts["filter_taps"] = "filter_taps.csv"

        report = result.report
        report.artifacts = artifacts
        (out_dir / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
        summary = (
            f"denoise[{args.method}]: snswf {report.snswf_snr_db:.2f} dB, "
            f"classic {report.classic_snr_db:.2f} dB, improvement {report.improvement_db:.2f} dB"
        )
    print(f"{summary} -> {out_dir / 'report.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snswf",
        description="Separation-based Wiener denoising for multichannel recordings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate the synthetic two-tone scenario")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--config", help="key=value config file")
    _add_options(p_sim, SIMULATE_OPTIONS)
    p_sim.set_defaults(func=cmd_simulate)

    p_sobi = sub.add_parser("sobi", help="separate reference channels into components")
    p_sobi.add_argument("record", help="input record CSV")
    p_sobi.add_argument("--out", required=True, help="output directory")
    p_sobi.add_argument("--config", help="key=value config file")
    _add_options(p_sobi, SOBI_OPTIONS)
    p_sobi.set_defaults(func=cmd_sobi)

    p_psd = sub.add_parser("psd", help="AR power spectral density and band SNR")
    p_psd.add_argument("record", help="input record CSV")
    p_psd.add_argument("--out", required=True, help="output directory")
    p_psd.add_argument("--channel", help="channel name (default: first channel)")
    p_psd.add_argument("--config", help="key=value config file")
    _add_options(p_psd, SPECTRAL_OPTIONS + BAND_OPTIONS)
    p_psd.set_defaults(func=cmd_psd)

    p_den = sub.add_parser("denoise", help="run classic and/or separation-based denoising")
    p_den.add_argument("record", help="input record CSV")
    p_den.add_argument("--out", required=True, help="output directory")
    p_den.add_argument(
        "--method", choices=("classic", "snswf", "both"), default="both",
        help="which filter(s) to run (default: both)",
    )
    p_den.add_argument("--signal-channel", help="primary channel name (default: first)")
    p_den.add_argument(
        "--reference-channels",
        help="comma-separated reference names (default: all other channels)",
    )
    p_den.add_argument("--config", help="key=value config file")
    _add_options(p_den, SOBI_OPTIONS + SPECTRAL_OPTIONS + POLICY_OPTIONS + WIENER_OPTIONS)
    p_den.set_defaults(func=cmd_denoise)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SnswfError as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
