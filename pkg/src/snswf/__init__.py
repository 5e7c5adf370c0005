"""Signal-noise separation based Wiener filtering for multichannel recordings.

Core pipeline: SOBI blind source separation of the reference channels,
AR-spectrum assessment of each separated component, selection of the
noise-dominant components, and multichannel FIR Wiener cancellation of the
selected components from the signal channel, benchmarked against a classic
Wiener filter fed with the raw references.
"""

from .exceptions import (
    CsvFormatError,
    CsvParseError,
    DegenerateInputError,
    DegenerateWhiteningError,
    SingularSpectrumError,
    SingularSystemError,
    SnswfError,
    UndefinedSnrError,
)
from .estimators import SnswfDenoiser, SobiSeparator, WienerCanceller
from .pipeline import (
    ClassicResult,
    ComponentAssessment,
    DenoiseReport,
    SelectionPolicy,
    SelectionReason,
    SnswfResult,
    WienerConfig,
    assess_components,
    run_classic,
    run_snswf,
    select_references,
)
from .records import (
    ChannelKind,
    ChannelMeta,
    MultichannelRecord,
    decimate,
    demean,
    load_csv,
    save_csv,
)
from .simulate import (
    BackgroundModel,
    SimulationConfig,
    synth_background,
    synth_simulation,
)
from .units import cpm_to_hz, hz_to_cpm
from .sobi import (
    SeparationResult,
    default_lags_s,
    joint_diagonalize,
    sample_covariance,
    sobi,
    whiten,
)
from .spectral import (
    ArModel,
    PsdEstimate,
    SnrResult,
    SpectralConfig,
    SpectralPeak,
    ar_psd,
    burg_fit,
    find_peaks,
    fit_psd,
    snr_db,
)
from .wiener import (
    CorrelationSet,
    FirFilter,
    SnrDensities,
    TransferSpec,
    WienerDesign,
    apply_fir,
    cancel,
    correlate,
    design_wiener,
    estimate_correlations,
    solve_wiener,
    theory_snr_densities,
    theory_transfer,
)

__version__ = "0.1.0"

__all__ = [
    "ArModel",
    "BackgroundModel",
    "ChannelKind",
    "ChannelMeta",
    "ClassicResult",
    "ComponentAssessment",
    "CorrelationSet",
    "CsvFormatError",
    "CsvParseError",
    "DegenerateInputError",
    "DegenerateWhiteningError",
    "DenoiseReport",
    "FirFilter",
    "MultichannelRecord",
    "PsdEstimate",
    "SelectionPolicy",
    "SelectionReason",
    "SeparationResult",
    "SimulationConfig",
    "SnrDensities",
    "SnrResult",
    "SnswfDenoiser",
    "SnswfError",
    "SnswfResult",
    "SobiSeparator",
    "SpectralConfig",
    "SpectralPeak",
    "SingularSpectrumError",
    "SingularSystemError",
    "TransferSpec",
    "UndefinedSnrError",
    "WienerCanceller",
    "WienerConfig",
    "WienerDesign",
    "apply_fir",
    "assess_components",
    "ar_psd",
    "burg_fit",
    "cancel",
    "correlate",
    "cpm_to_hz",
    "decimate",
    "default_lags_s",
    "demean",
    "design_wiener",
    "estimate_correlations",
    "find_peaks",
    "fit_psd",
    "hz_to_cpm",
    "joint_diagonalize",
    "load_csv",
    "run_classic",
    "run_snswf",
    "sample_covariance",
    "save_csv",
    "select_references",
    "snr_db",
    "sobi",
    "solve_wiener",
    "synth_background",
    "synth_simulation",
    "theory_snr_densities",
    "theory_transfer",
    "whiten",
]
