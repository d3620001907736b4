"""Circular (Morgan-style) fingerprints and Tanimoto similarity.

Atom environments of growing radius are hashed with FNV-1a over sorted
neighbor tuples, so the bits are deterministic and independent of atom
input order. The radius-0 invariant covers element identity, aromaticity,
charge and isotope, but deliberately not degree or hydrogen count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .molecule import BOND_ORDERS, Molecule

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    return h


def _hash_ints(values: tuple[int, ...]) -> int:
    return _fnv1a(b"".join(v.to_bytes(8, "little") for v in values))


@dataclass(frozen=True)
class Fingerprint:
    bits: np.ndarray  # bool vector, length nbits
    radius: int

    def __post_init__(self):
        n = len(self.bits)
        if n < 1 or n & (n - 1):
            raise ValueError(f"fingerprint length {n} is not a power of two")

    @property
    def nbits(self) -> int:
        return len(self.bits)

    def on_bits(self) -> list[int]:
        return np.flatnonzero(self.bits).tolist()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Fingerprint)
            and self.radius == other.radius
            and np.array_equal(self.bits, other.bits)
        )


def atom_invariants(mol: Molecule) -> list[int]:
    """Radius-0 invariant hash per atom."""
    out = []
    for atom in mol.atoms:
        data = f"{atom.symbol}|{int(atom.aromatic)}|{atom.charge}|{atom.isotope or 0}"
        out.append(_fnv1a(data.encode()))
    return out


def circular_fingerprint(mol: Molecule, radius: int = 2, nbits: int = 2048) -> Fingerprint:
    """Hash every atom environment up to `radius` into an nbits bit vector."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if nbits < 1 or nbits & (nbits - 1):
        raise ValueError(f"nbits {nbits} is not a power of two")
    bits = np.zeros(nbits, dtype=bool)
    inv = atom_invariants(mol)
    adj = mol.adjacency()
    for h in inv:
        bits[h % nbits] = True
    for _ in range(radius):
        new_inv = []
        for i in range(len(mol.atoms)):
            neigh = sorted(
                (BOND_ORDERS.index(mol.bonds[bi].order), inv[j]) for j, bi in adj[i]
            )
            flat: list[int] = [inv[i]]
            for code, nb in neigh:
                flat.extend((code, nb))
            new_inv.append(_hash_ints(tuple(flat)))
        inv = new_inv
        for h in inv:
            bits[h % nbits] = True
    return Fingerprint(bits, radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """Intersection over union of on-bits; 1.0 when both vectors are empty."""
    if a.nbits != b.nbits:
        raise ValueError(f"fingerprint lengths differ: {a.nbits} vs {b.nbits}")
    union = int(np.count_nonzero(a.bits | b.bits))
    if union == 0:
        return 1.0
    inter = int(np.count_nonzero(a.bits & b.bits))
    return inter / union
