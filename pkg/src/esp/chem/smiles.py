"""SMILES reading and writing without external chemistry libraries.

Supported subset: organic-subset atoms (B, C, N, O, P, S, F, Cl, Br, I and
their aromatic lowercase forms), bracket atoms with isotope / charge /
explicit hydrogen counts, branches, ring closures 1-99 including %nn, bond
orders - = # :, and dot-separated components. Stereo markers (/ \\ @ @@) are
parsed and discarded with a warning; downstream spectra live in 1 Da bins,
which cannot see stereochemistry anyway.

Implicit hydrogens are filled from the standard valence table. Aromatic
bonds count one unit toward an atom's valence; aromatic C/N/B/P consume one
extra unit for the ring pi electron, while aromatic O/S donate a lone pair
and get no correction. This reproduces the textbook hydrogen counts for
benzene, pyridine, furan and thiophene.
"""

from __future__ import annotations

import math
import warnings

from .elements import (
    AROMATIC_SYMBOLS,
    MONOISOTOPIC_MASS,
    ORGANIC_SUBSET,
    STANDARD_VALENCES,
)
from .molecule import Atom, Bond, Molecule, UnknownElement

_BOND_CHARS = {"-": "single", "=": "double", "#": "triple", ":": "aromatic"}
_BOND_TO_CHAR = {"single": "-", "double": "=", "triple": "#", "aromatic": ":"}
_PI_CORRECTED = {"C", "N", "B", "P"}


class SmilesFeatureWarning(UserWarning):
    """A recognized but unsupported SMILES feature was dropped."""


class SmilesError(ValueError):
    """Syntax or chemistry error in a SMILES string; names the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnbalancedRingClosure(SmilesError):
    pass


class UnbalancedParenthesis(SmilesError):
    pass


class ValenceOverflow(SmilesError):
    pass


class _PendingAtom:
    __slots__ = ("symbol", "aromatic", "charge", "explicit_h", "isotope", "bracket", "offset")

    def __init__(self, symbol, aromatic, charge, explicit_h, isotope, bracket, offset):
        self.symbol = symbol
        self.aromatic = aromatic
        self.charge = charge
        self.explicit_h = explicit_h
        self.isotope = isotope
        self.bracket = bracket
        self.offset = offset


def parse_smiles(s: str) -> Molecule:
    """Parse a SMILES string into a molecular graph with implicit hydrogens."""
    if not s:
        raise SmilesError("empty SMILES", 0)
    atoms: list[_PendingAtom] = []
    bonds: dict[tuple[int, int], str] = {}
    bond_list: list[tuple[int, int, str | None]] = []
    prev: int | None = None
    pending: str | None = None
    stack: list[tuple[int | None, int]] = []
    rings: dict[int, tuple[int, str | None, int]] = {}
    i = 0
    n = len(s)

    def add_bond(a: int, b: int, char: str | None, offset: int):
        if a == b:
            raise SmilesError("ring closure bonds an atom to itself", offset)
        key = (min(a, b), max(a, b))
        if key in bonds:
            raise SmilesError(f"duplicate bond between atoms {a} and {b}", offset)
        bonds[key] = ""  # order resolved later, once aromatic flags are final
        bond_list.append((a, b, char))

    def close_ring(num: int, offset: int):
        nonlocal pending
        if prev is None:
            raise SmilesError("ring closure digit before any atom", offset)
        if num in rings:
            other, other_char, _ = rings.pop(num)
            if pending and other_char and pending != other_char:
                raise SmilesError(
                    f"conflicting bond orders for ring closure {num}", offset
                )
            add_bond(other, prev, pending or other_char, offset)
        else:
            rings[num] = (prev, pending, offset)
        pending = None

    def add_atom(atom: _PendingAtom):
        nonlocal prev, pending
        atoms.append(atom)
        idx = len(atoms) - 1
        if prev is not None:
            add_bond(prev, idx, pending, atom.offset)
        prev = idx
        pending = None

    while i < n:
        c = s[i]
        if c == "(":
            stack.append((prev, i))
            i += 1
        elif c == ")":
            if not stack:
                raise UnbalancedParenthesis("unmatched ')'", i)
            prev = stack.pop()[0]
            i += 1
        elif c in _BOND_CHARS:
            if pending is not None:
                raise SmilesError("two consecutive bond symbols", i)
            pending = c
            i += 1
        elif c in "/\\":
            warnings.warn(
                f"stereo bond marker {c!r} at offset {i} discarded",
                SmilesFeatureWarning,
                stacklevel=2,
            )
            if pending is None:
                pending = "-"
            i += 1
        elif c == ".":
            if pending is not None:
                raise SmilesError("bond symbol before '.'", i)
            prev = None
            i += 1
        elif c == "%":
            if i + 2 >= n or not s[i + 1 : i + 3].isdigit():
                raise SmilesError("'%' must be followed by two digits", i)
            close_ring(int(s[i + 1 : i + 3]), i)
            i += 3
        elif c.isdigit():
            close_ring(int(c), i)
            i += 1
        elif c == "[":
            atom, i = _parse_bracket(s, i)
            add_atom(atom)
        else:
            atom, i = _parse_organic(s, i)
            add_atom(atom)

    if stack:
        raise UnbalancedParenthesis("unmatched '('", stack[0][1])
    if rings:
        num, (_, _, offset) = min(rings.items(), key=lambda kv: kv[1][2])
        raise UnbalancedRingClosure(f"ring closure {num} never closed", offset)
    if not atoms:
        raise SmilesError("no atoms in SMILES", 0)

    resolved = [
        Bond(a, b, _resolve_order(char, atoms[a].aromatic, atoms[b].aromatic))
        for a, b, char in bond_list
    ]
    final_atoms = _fill_hydrogens(atoms, resolved)
    return Molecule(final_atoms, resolved, source_smiles=s)


def _resolve_order(char: str | None, arom_a: bool, arom_b: bool) -> str:
    if char is not None:
        return _BOND_CHARS[char]
    return "aromatic" if (arom_a and arom_b) else "single"


def _parse_organic(s: str, i: int) -> tuple[_PendingAtom, int]:
    two = s[i : i + 2]
    if two in ("Cl", "Br"):
        return _PendingAtom(two, False, 0, None, None, False, i), i + 2
    c = s[i]
    if c in "BCNOPSFI":
        return _PendingAtom(c, False, 0, None, None, False, i), i + 1
    if c in "bcnops":
        return _PendingAtom(c.upper(), True, 0, None, None, False, i), i + 1
    raise UnknownElement(f"unknown atom symbol at byte offset {i}: {s[i:i+2]!r}", i)


def _parse_bracket(s: str, start: int) -> tuple[_PendingAtom, int]:
    i = start + 1
    n = len(s)

    def digits() -> str:
        nonlocal i
        out = ""
        while i < n and s[i].isdigit():
            out += s[i]
            i += 1
        return out

    iso = digits()
    isotope = int(iso) if iso else None
    if i >= n:
        raise SmilesError("unterminated bracket atom", start)

    aromatic = False
    sym_off = i
    two = s[i : i + 2]
    if two in ("se", "as"):
        symbol, aromatic, i = two.capitalize(), True, i + 2
    elif s[i].islower() and s[i] in "bcnops":
        symbol, aromatic, i = s[i].upper(), True, i + 1
    elif s[i].isupper():
        if two[1:].islower() and len(two) == 2 and two in MONOISOTOPIC_MASS:
            symbol, i = two, i + 2
        elif s[i] in MONOISOTOPIC_MASS:
            symbol, i = s[i], i + 1
        else:
            raise UnknownElement(
                f"unknown element at byte offset {sym_off}: {two!r}", sym_off
            )
    else:
        raise UnknownElement(
            f"unknown element at byte offset {sym_off}: {two!r}", sym_off
        )
    if aromatic and symbol.lower() not in AROMATIC_SYMBOLS:
        raise UnknownElement(f"{symbol!r} cannot be aromatic", sym_off)

    while i < n and s[i] == "@":
        j = i
        while i < n and s[i] == "@":
            i += 1
        warnings.warn(
            f"chirality marker at offset {j} discarded",
            SmilesFeatureWarning,
            stacklevel=3,
        )

    explicit_h = 0
    if i < n and s[i] == "H":
        i += 1
        d = digits()
        explicit_h = int(d) if d else 1

    charge = 0
    if i < n and s[i] in "+-":
        sign = 1 if s[i] == "+" else -1
        ch = s[i]
        i += 1
        d = digits()
        if d:
            charge = sign * int(d)
        else:
            charge = sign
            while i < n and s[i] == ch:
                charge += sign
                i += 1

    if i < n and s[i] == ":":
        i += 1
        digits()  # atom class labels are accepted and ignored

    if i >= n or s[i] != "]":
        raise SmilesError("expected ']' to close bracket atom", start)
    return _PendingAtom(symbol, aromatic, charge, explicit_h, isotope, True, start), i + 1


def _effective_valence(atom: _PendingAtom, incident: list[Bond]) -> float:
    total = 0.0
    for bond in incident:
        if bond.order == "aromatic":
            total += 1.0 if atom.aromatic else 1.5
        else:
            total += {"single": 1.0, "double": 2.0, "triple": 3.0}[bond.order]
    if atom.aromatic and atom.symbol in _PI_CORRECTED:
        total += 1.0
    return total


def _fill_hydrogens(atoms: list[_PendingAtom], bonds: list[Bond]) -> list[Atom]:
    incident: list[list[Bond]] = [[] for _ in atoms]
    for bond in bonds:
        incident[bond.a].append(bond)
        incident[bond.b].append(bond)
    out = []
    for idx, pa in enumerate(atoms):
        if pa.bracket:
            h = pa.explicit_h or 0
        else:
            need = math.ceil(_effective_valence(pa, incident[idx]) - 1e-9)
            valences = STANDARD_VALENCES[pa.symbol]
            if need > max(valences):
                raise ValenceOverflow(
                    f"{pa.symbol} with valence {need} exceeds {max(valences)}",
                    pa.offset,
                )
            h = min(v for v in valences if v >= need) - need
        out.append(Atom(pa.symbol, pa.aromatic, pa.charge, h, pa.isotope))
    return out


def _default_fill(mol: Molecule, idx: int) -> int | None:
    """Hydrogen count the parser would infer for atom idx, or None if the
    atom could not be written without brackets."""
    atom = mol.atoms[idx]
    if atom.symbol not in ORGANIC_SUBSET or atom.charge or atom.isotope is not None:
        return None
    if atom.aromatic and atom.symbol.lower() not in AROMATIC_SYMBOLS:
        return None
    pseudo = _PendingAtom(atom.symbol, atom.aromatic, 0, None, None, False, 0)
    incident = [b for b in mol.bonds if idx in (b.a, b.b)]
    need = math.ceil(_effective_valence(pseudo, incident) - 1e-9)
    valences = STANDARD_VALENCES[atom.symbol]
    if need > max(valences):
        return None
    return min(v for v in valences if v >= need) - need


def _dense_rank(keys: list) -> list[int]:
    order = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def canonical_ranks(mol: Molecule) -> list[int]:
    """Order-independent atom ranks via iterative neighborhood refinement.

    Ties remaining after refinement are broken inside what are (for typical
    organic molecules) automorphism orbits, so the resulting ranking does not
    depend on input atom order.
    """
    n = len(mol.atoms)
    adj = mol.adjacency()

    def refine(ranks: list[int]) -> list[int]:
        while True:
            keys = []
            for i in range(n):
                neigh = sorted(
                    (mol.bonds[bi].order, ranks[j]) for j, bi in adj[i]
                )
                keys.append((ranks[i], tuple(neigh)))
            new = _dense_rank(keys)
            if len(set(new)) == len(set(ranks)):
                return new
            ranks = new

    init = [
        (a.symbol, a.aromatic, a.charge, a.implicit_h, a.isotope or 0, len(adj[i]))
        for i, a in enumerate(mol.atoms)
    ]
    ranks = refine(_dense_rank(init))
    while len(set(ranks)) < n:
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        dup = min(r for r, c in counts.items() if c > 1)
        ranks = [r * 2 for r in ranks]
        ranks[ranks.index(dup * 2)] -= 1
        ranks = refine(_dense_rank(ranks))
    return ranks


def write_smiles(mol: Molecule, canonical: bool = True) -> str:
    """Render the molecule back to SMILES (canonical atom order by default)."""
    if not mol.atoms:
        raise SmilesError("cannot render an empty molecule", 0)
    n = len(mol.atoms)
    ranks = canonical_ranks(mol) if canonical else list(range(n))
    adj = mol.adjacency()

    visited = [False] * n
    seen_edges: set[int] = set()
    ring_bonds: dict[int, list[int]] = {}  # atom -> bond indices closing rings
    tree: dict[int, list[int]] = {i: [] for i in range(n)}
    components = []

    def explore(a: int):
        visited[a] = True
        for b, bi in sorted(adj[a], key=lambda t: ranks[t[0]]):
            if bi in seen_edges:
                continue
            seen_edges.add(bi)
            if visited[b]:
                ring_bonds.setdefault(a, []).append(bi)
                ring_bonds.setdefault(b, []).append(bi)
            else:
                tree[a].append(b)
                explore(b)

    for root in sorted(range(n), key=lambda i: ranks[i]):
        if not visited[root]:
            components.append(root)
            explore(root)

    digit_for_bond: dict[int, int] = {}
    in_use: set[int] = set()

    def take_digit(bi: int) -> int:
        num = 1
        while num in in_use:
            num += 1
        if num > 99:
            raise SmilesError("more than 99 simultaneous ring closures", 0)
        in_use.add(num)
        digit_for_bond[bi] = num
        return num

    def bond_char(bond: Bond) -> str:
        a, b = mol.atoms[bond.a], mol.atoms[bond.b]
        default = "aromatic" if (a.aromatic and b.aromatic) else "single"
        if bond.order == default:
            return ""
        if bond.order == "single" and a.aromatic and b.aromatic:
            return "-"
        return _BOND_TO_CHAR[bond.order]

    def atom_text(idx: int) -> str:
        atom = mol.atoms[idx]
        sym = atom.symbol.lower() if atom.aromatic else atom.symbol
        if _default_fill(mol, idx) == atom.implicit_h:
            return sym
        parts = ["["]
        if atom.isotope is not None:
            parts.append(str(atom.isotope))
        parts.append(sym)
        if atom.implicit_h:
            parts.append("H" if atom.implicit_h == 1 else f"H{atom.implicit_h}")
        if atom.charge:
            sign = "+" if atom.charge > 0 else "-"
            mag = abs(atom.charge)
            parts.append(sign if mag == 1 else f"{sign}{mag}")
        parts.append("]")
        return "".join(parts)

    def emit(idx: int, out: list[str]):
        out.append(atom_text(idx))
        for bi in ring_bonds.get(idx, ()):
            if bi in digit_for_bond:
                num = digit_for_bond.pop(bi)
                in_use.discard(num)
            else:
                out.append(bond_char(mol.bonds[bi]))
                num = take_digit(bi)
            out.append(str(num) if num < 10 else f"%{num:02d}")
        children = sorted(tree[idx], key=lambda j: ranks[j])
        for pos, child in enumerate(children):
            bi = next(b for j, b in adj[idx] if j == child)
            last = pos == len(children) - 1
            if not last:
                out.append("(")
            out.append(bond_char(mol.bonds[bi]))
            emit(child, out)
            if not last:
                out.append(")")

    pieces = []
    for root in components:
        out: list[str] = []
        emit(root, out)
        pieces.append("".join(out))
    return ".".join(sorted(pieces))


def canonical_smiles(mol: Molecule) -> str:
    """Canonical text form; equal strings imply isomorphic graphs."""
    return write_smiles(mol, canonical=True)
