from .documents import to_peak_document
from .msp import MalformedPeakLine, MspError, PeakCountMismatch, parse_msp, render_msp
from .spectrum import (
    ADDUCT_SHIFTS,
    BIN_WIDTH,
    DEFAULT_BINS,
    BinnedSpectrum,
    InstrumentSetting,
    NegativeIntensity,
    ZeroVectorWarning,
    adduct_shift,
    bin_peaks,
    cosine_similarity,
    l2_normalize,
    parse_binned_tsv,
    render_binned_tsv,
)

__all__ = [
    "ADDUCT_SHIFTS",
    "BIN_WIDTH",
    "DEFAULT_BINS",
    "BinnedSpectrum",
    "InstrumentSetting",
    "MalformedPeakLine",
    "MspError",
    "NegativeIntensity",
    "PeakCountMismatch",
    "ZeroVectorWarning",
    "adduct_shift",
    "bin_peaks",
    "cosine_similarity",
    "l2_normalize",
    "parse_binned_tsv",
    "parse_msp",
    "render_binned_tsv",
    "render_msp",
    "to_peak_document",
]
