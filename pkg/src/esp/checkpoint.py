"""Binary model checkpoints.

Layout: 7-byte magic "ESPCKPT", little-endian u32 format version, a
length-prefixed JSON header (config echo, vocabularies, RNG seed, training
state), then named tensor sections sorted by name. Each section is the
length-prefixed UTF-8 name, u32 ndim, u64 dims, and row-major little-endian
float32 data. Model parameters live on the float32 grid in memory, so the
round trip is bit-exact. Writes are atomic (temp file + rename).
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"ESPCKPT"
VERSION = 1


class CheckpointError(ValueError):
    pass


class BadMagic(CheckpointError):
    """File does not start with the checkpoint magic."""


class VersionMismatch(CheckpointError):
    def __init__(self, found: int, expected: int):
        super().__init__(
            f"checkpoint format version {found}, this build reads version {expected}"
        )
        self.found = found
        self.expected = expected


def save_checkpoint(path: str | Path, header: dict, tensors: dict[str, np.ndarray]):
    path = Path(path)
    payload = json.dumps(header, sort_keys=True).encode()
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", VERSION))
            fh.write(struct.pack("<Q", len(payload)))
            fh.write(payload)
            fh.write(struct.pack("<Q", len(tensors)))
            for name in sorted(tensors):
                data = np.ascontiguousarray(tensors[name], dtype=np.float32)
                encoded = name.encode()
                fh.write(struct.pack("<Q", len(encoded)))
                fh.write(encoded)
                fh.write(struct.pack("<I", data.ndim))
                for dim in data.shape:
                    fh.write(struct.pack("<Q", dim))
                fh.write(data.astype("<f4").tobytes())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load_checkpoint(path: str | Path):
    """Returns (header dict, name -> float64 ndarray)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise BadMagic(f"{path}: expected magic {MAGIC!r}, found {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise VersionMismatch(version, VERSION)
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode())
        (n_sections,) = struct.unpack("<Q", fh.read(8))
        tensors = {}
        for _ in range(n_sections):
            (name_len,) = struct.unpack("<Q", fh.read(8))
            name = fh.read(name_len).decode()
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = tuple(
                struct.unpack("<Q", fh.read(8))[0] for _ in range(ndim)
            )
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 4)
            if len(raw) != count * 4:
                raise CheckpointError(f"{path}: truncated tensor section {name!r}")
            data = np.frombuffer(raw, dtype="<f4").reshape(shape)
            tensors[name] = data.astype(np.float64)
    return header, tensors
