"""Molecular graph primitives: atoms, bonds, molecules, formulas, masses."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .elements import MONOISOTOPIC_MASS, isotope_mass

BOND_ORDERS = ("single", "double", "triple", "aromatic")

BOND_VALENCE = {"single": 1.0, "double": 2.0, "triple": 3.0, "aromatic": 1.5}


class MoleculeError(ValueError):
    """Structural problem with a molecular graph."""


class EmptyMolecule(MoleculeError):
    """Operation requires at least one atom."""


class UnknownElement(MoleculeError):
    """Element symbol is not in the embedded tables.

    Carries the byte offset into the source SMILES when raised by the parser.
    """

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class Atom:
    symbol: str
    aromatic: bool = False
    charge: int = 0
    implicit_h: int = 0
    isotope: int | None = None


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: str = "single"

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass
class Molecule:
    atoms: list[Atom]
    bonds: list[Bond]
    source_smiles: str = ""
    _adjacency: list[list[tuple[int, int]]] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        n = len(self.atoms)
        seen = set()
        for bond in self.bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise MoleculeError(f"bond ({bond.a},{bond.b}) indexes outside {n} atoms")
            if bond.a == bond.b:
                raise MoleculeError(f"self-bond on atom {bond.a}")
            key = (min(bond.a, bond.b), max(bond.a, bond.b))
            if key in seen:
                raise MoleculeError(f"duplicate bond between atoms {key}")
            seen.add(key)
            if bond.order not in BOND_ORDERS:
                raise MoleculeError(f"unknown bond order {bond.order!r}")
        for i, atom in enumerate(self.atoms):
            if atom.implicit_h < 0:
                raise MoleculeError(f"negative implicit hydrogen count on atom {i}")
            if atom.symbol not in MONOISOTOPIC_MASS:
                raise UnknownElement(f"unknown element {atom.symbol!r} on atom {i}")

    def __len__(self) -> int:
        return len(self.atoms)

    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per-atom list of (neighbor index, bond index), built lazily."""
        if self._adjacency is None:
            adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
            for bi, bond in enumerate(self.bonds):
                adj[bond.a].append((bond.b, bi))
                adj[bond.b].append((bond.a, bi))
            self._adjacency = adj
        return self._adjacency

    def degree(self, idx: int) -> int:
        return len(self.adjacency()[idx])

    def permuted(self, perm: list[int]) -> "Molecule":
        """Relabeled copy: new index perm[i] holds old atom i."""
        if sorted(perm) != list(range(len(self.atoms))):
            raise MoleculeError("perm must be a permutation of atom indices")
        atoms = [None] * len(self.atoms)
        for old, new in enumerate(perm):
            atoms[new] = self.atoms[old]
        bonds = [Bond(perm[b.a], perm[b.b], b.order) for b in self.bonds]
        return Molecule(atoms, bonds, self.source_smiles)


class Formula:
    """Element -> count map including hydrogens, rendered in Hill order."""

    def __init__(self, counts: dict[str, int]):
        self.counts = {el: n for el, n in counts.items() if n > 0}
        for el, n in self.counts.items():
            if n < 1:
                raise MoleculeError(f"formula count for {el} must be >= 1")

    def __eq__(self, other) -> bool:
        return isinstance(other, Formula) and self.counts == other.counts

    def __hash__(self) -> int:
        return hash(frozenset(self.counts.items()))

    def __repr__(self) -> str:
        return f"Formula({str(self)!r})"

    def __str__(self) -> str:
        # Hill order: C then H then alphabetical; fully alphabetical without C.
        parts = []
        if "C" in self.counts:
            order = ["C"] + (["H"] if "H" in self.counts else [])
            order += sorted(el for el in self.counts if el not in ("C", "H"))
        else:
            order = sorted(self.counts)
        for el in order:
            n = self.counts[el]
            parts.append(el if n == 1 else f"{el}{n}")
        return "".join(parts)

    @classmethod
    def parse(cls, text: str) -> "Formula":
        counts: Counter[str] = Counter()
        i = 0
        while i < len(text):
            if not text[i].isalpha() or not text[i].isupper():
                raise MoleculeError(f"bad formula {text!r} at position {i}")
            sym = text[i]
            i += 1
            if i < len(text) and text[i].islower():
                sym += text[i]
                i += 1
            digits = ""
            while i < len(text) and text[i].isdigit():
                digits += text[i]
                i += 1
            counts[sym] += int(digits) if digits else 1
        return cls(dict(counts))


def molecular_formula(mol: Molecule) -> Formula:
    """Formula of the molecule, implicit hydrogens included."""
    counts: Counter[str] = Counter()
    for atom in mol.atoms:
        counts[atom.symbol] += 1
        counts["H"] += atom.implicit_h
    return Formula(dict(counts))


def monoisotopic_mass(mol: Molecule) -> float:
    """Sum of most-abundant-isotope masses over atoms and implicit hydrogens."""
    if not mol.atoms:
        raise EmptyMolecule("cannot compute the mass of an empty molecule")
    total = 0.0
    for atom in mol.atoms:
        total += isotope_mass(atom.symbol, atom.isotope)
        total += atom.implicit_h * MONOISOTOPIC_MASS["H"]
    return total
