"""MSP spectral library records: blank-line separated header + peak blocks.

Recognized headers are `Name:`, `PrecursorMZ:`, `Precursor_type:`,
`Collision_energy:` and `Num Peaks:`; anything else is preserved verbatim
in the record metadata.
"""

from __future__ import annotations

from typing import Iterable, TextIO


class MspError(ValueError):
    pass


class PeakCountMismatch(MspError):
    """Declared `Num Peaks` differs from the number of peak lines."""


class MalformedPeakLine(MspError):
    """A peak line did not parse as `mz intensity`; names the line number."""


def parse_msp(stream: TextIO | Iterable[str]):
    """Parse records into a list of (peaks, metadata) pairs.

    Peaks are (mz, intensity) float tuples; metadata maps original header
    keys to their string values.
    """
    records = []
    metadata: dict[str, str] = {}
    peaks: list[tuple[float, float]] = []
    declared: int | None = None
    in_peaks = False
    start_line = 0
    lineno = 0

    def flush():
        nonlocal metadata, peaks, declared, in_peaks
        if not metadata and not peaks:
            return
        if declared is not None and declared != len(peaks):
            raise PeakCountMismatch(
                f"record starting at line {start_line}: declared {declared} peaks, "
                f"parsed {len(peaks)}"
            )
        records.append((peaks, metadata))
        metadata, peaks, declared, in_peaks = {}, [], None, False

    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            flush()
            continue
        if not metadata and not peaks:
            start_line = lineno
        if not in_peaks and ":" in line:
            key, _, value = line.partition(":")
            key = key.strip()
            value = value.strip()
            if key.lower().replace(" ", "") == "numpeaks":
                try:
                    declared = int(value)
                except ValueError:
                    raise MspError(f"line {lineno}: bad Num Peaks value {value!r}")
                in_peaks = True
            else:
                metadata[key] = value
            continue
        parts = line.replace(";", " ").split()
        if len(parts) < 2:
            raise MalformedPeakLine(f"line {lineno}: expected 'mz intensity', got {line!r}")
        try:
            peaks.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise MalformedPeakLine(f"line {lineno}: non-numeric peak {line!r}")
    flush()
    return records


def render_msp(records, stream: TextIO):
    """Write records back out; peak values at 5 decimal places.

    `Num Peaks` is regenerated from the peak list (parse_msp keeps it out of
    the metadata map), so parse(render(records)) == records whenever the
    peak values are already at 5 decimals.
    """
    for peaks, metadata in records:
        for key, value in metadata.items():
            stream.write(f"{key}: {value}\n")
        stream.write(f"Num Peaks: {len(peaks)}\n")
        for mz, intensity in peaks:
            stream.write(f"{mz:.5f} {intensity:.5f}\n")
        stream.write("\n")
