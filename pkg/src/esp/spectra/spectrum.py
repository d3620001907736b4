"""Binned spectra, instrument settings, and the similarity primitives."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, TextIO

import numpy as np

DEFAULT_BINS = 1000
BIN_WIDTH = 1.0

# Mass shift from neutral molecule to the charged precursor, by adduct.
PROTON = 1.00728
ADDUCT_SHIFTS = {
    "[M+H]+": PROTON,
    "[M+Na]+": 22.98922,
    "[M+H-H2O]+": PROTON - 18.01056,
    "[M+H-2H2O]+": PROTON - 36.02113,
    "[M+H-NH3]+": PROTON - 17.02655,
}


class NegativeIntensity(ValueError):
    """A peak with intensity below zero was supplied."""


class ZeroVectorWarning(UserWarning):
    """A similarity or normalization saw an all-zero spectrum."""


@dataclass(frozen=True)
class InstrumentSetting:
    """Precursor adduct plus collision energy normalized to [0, 1]."""

    precursor_type: str = "[M+H]+"
    collision_energy: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.collision_energy <= 1.0:
            raise ValueError(
                f"normalized collision energy {self.collision_energy} outside [0,1]"
            )

    @classmethod
    def from_nce(cls, precursor_type: str, nce: float) -> "InstrumentSetting":
        """Normalized collision energy scale: divide by 100, clamp to [0,1]."""
        return cls(precursor_type, min(max(nce / 100.0, 0.0), 1.0))

    def one_hot(self, vocab: list[str]) -> np.ndarray:
        """One-hot over `vocab`; unknown types map to the final OTHER slot."""
        vec = np.zeros(len(vocab) + 1)
        try:
            vec[vocab.index(self.precursor_type)] = 1.0
        except ValueError:
            vec[-1] = 1.0
        return vec

    def feature_vector(self, vocab: list[str]) -> np.ndarray:
        return np.concatenate([self.one_hot(vocab), [self.collision_energy]])


def adduct_shift(precursor_type: str) -> float:
    shift = ADDUCT_SHIFTS.get(precursor_type)
    if shift is None:
        warnings.warn(
            f"unknown precursor type {precursor_type!r}; assuming protonation",
            stacklevel=2,
        )
        return PROTON
    return shift


@dataclass
class BinnedSpectrum:
    """Intensity vector over 1 Da m/z bins plus acquisition metadata."""

    intensities: np.ndarray
    precursor_mz: float = 0.0
    instrument: InstrumentSetting | None = None
    dropped_peaks: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=np.float64)
        if self.intensities.ndim != 1:
            raise ValueError("intensities must be a 1-D vector")
        if np.any(self.intensities < 0):
            raise NegativeIntensity("binned intensities must be non-negative")

    @property
    def n_bins(self) -> int:
        return len(self.intensities)

    def total(self) -> float:
        return float(self.intensities.sum())


def bin_peaks(
    peaks: Iterable[tuple[float, float]],
    n_bins: int = DEFAULT_BINS,
    precursor_mz: float = 0.0,
    instrument: InstrumentSetting | None = None,
) -> BinnedSpectrum:
    """Accumulate (mz, intensity) pairs into floor(mz) bins.

    Intensities landing in the same bin are summed; peaks at or above the
    bin range are dropped and counted in `dropped_peaks`.
    """
    out = np.zeros(n_bins, dtype=np.float64)
    dropped = 0
    for mz, intensity in peaks:
        if intensity < 0:
            raise NegativeIntensity(f"peak at m/z {mz} has intensity {intensity}")
        if mz < 0:
            raise ValueError(f"negative m/z {mz}")
        idx = int(np.floor(mz))
        if idx >= n_bins:
            dropped += 1
            continue
        out[idx] += intensity
    return BinnedSpectrum(out, precursor_mz, instrument, dropped)


def l2_normalize(spectrum: BinnedSpectrum, sqrt_intensity: bool = False) -> BinnedSpectrum:
    """Unit-norm copy; an all-zero spectrum stays all-zero (with a warning).

    `sqrt_intensity` applies a square-root transform before normalizing,
    for ablations against the plain scale.
    """
    values = spectrum.intensities
    if sqrt_intensity:
        values = np.sqrt(values)
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        warnings.warn("normalizing an all-zero spectrum", ZeroVectorWarning, stacklevel=2)
        return replace(spectrum, intensities=values.copy())
    return replace(spectrum, intensities=values / norm)


def cosine_similarity(a: BinnedSpectrum | np.ndarray, b: BinnedSpectrum | np.ndarray) -> float:
    """Cosine of the two intensity vectors; 0.0 (with a warning) on zero norms."""
    va = a.intensities if isinstance(a, BinnedSpectrum) else np.asarray(a, dtype=np.float64)
    vb = b.intensities if isinstance(b, BinnedSpectrum) else np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"bin counts differ: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        warnings.warn("cosine of an all-zero spectrum", ZeroVectorWarning, stacklevel=2)
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


def render_binned_tsv(spectrum: BinnedSpectrum, stream: TextIO):
    """Write `bin_index<TAB>intensity` rows for nonzero bins."""
    stream.write(f"#P={spectrum.n_bins}\n")
    for idx in np.flatnonzero(spectrum.intensities):
        stream.write(f"{idx}\t{spectrum.intensities[idx]:.6f}\n")


def parse_binned_tsv(stream: TextIO | Iterable[str]) -> BinnedSpectrum:
    lines = iter(stream)
    header = next(lines, "")
    if not header.startswith("#P="):
        raise ValueError("missing #P=<n_bins> header")
    n_bins = int(header.strip()[3:])
    out = np.zeros(n_bins)
    for line in lines:
        line = line.strip()
        if not line:
            continue
        idx_text, value_text = line.split("\t")
        out[int(idx_text)] = float(value_text)
    return BinnedSpectrum(out)
