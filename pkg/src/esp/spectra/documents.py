"""Spectra as bag-of-words documents: bins are words, counts scale with
intensity relative to the base peak."""

from __future__ import annotations

import numpy as np

from .spectrum import BinnedSpectrum


def to_peak_document(spectrum: BinnedSpectrum, quantization: int = 100) -> dict[int, int]:
    """word_id -> count map with count = round(intensity / max * quantization).

    Uses round-half-to-even; zero counts are omitted, so an empty spectrum
    yields an empty document.
    """
    if quantization < 1:
        raise ValueError("quantization must be >= 1")
    values = spectrum.intensities
    peak = values.max() if len(values) else 0.0
    if peak <= 0.0:
        return {}
    doc = {}
    for idx in np.flatnonzero(values):
        count = round(values[idx] / peak * quantization)
        if count > 0:
            doc[int(idx)] = int(count)
    return doc
