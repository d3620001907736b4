"""Synthetic benchmark data.

Random tree-shaped molecules over {C, N, O} with single bonds: every tree
over a fixed atom multiset has the same molecular formula, which makes rich
formula-matched candidate sets trivial to build. Ground-truth spectra are a
fixed deterministic function of the molecule: one peak per bond cut at each
fragment's protonated mass, with an intensity keyed to a hash of the
fragment's canonical form, plus the precursor peak.
"""

from __future__ import annotations

import numpy as np

from .chem.elements import MONOISOTOPIC_MASS
from .chem.fingerprint import _fnv1a
from .chem.molecule import Atom, Bond, Molecule, monoisotopic_mass
from .chem.smiles import canonical_smiles
from .spectra.spectrum import PROTON, BinnedSpectrum, InstrumentSetting, bin_peaks

VALENCE_CAP = {"C": 4, "N": 3, "O": 2}


def random_tree_molecule(rng: np.random.Generator, atom_counts: dict[str, int]) -> Molecule:
    """Uniform-ish random tree over the given atom multiset, single bonds."""
    symbols = [sym for sym, n in sorted(atom_counts.items()) for _ in range(n)]
    if len(symbols) < 1:
        raise ValueError("need at least one atom")
    order = rng.permutation(len(symbols))
    symbols = [symbols[i] for i in order]
    degrees = [0] * len(symbols)
    bonds = []
    for i in range(1, len(symbols)):
        open_slots = [
            j for j in range(i) if degrees[j] < VALENCE_CAP[symbols[j]]
        ]
        if not open_slots:
            raise ValueError("ran out of open valence while growing the tree")
        j = int(open_slots[rng.integers(len(open_slots))])
        bonds.append(Bond(j, i, "single"))
        degrees[j] += 1
        degrees[i] += 1
    atoms = [
        Atom(sym, implicit_h=VALENCE_CAP[sym] - deg)
        for sym, deg in zip(symbols, degrees)
    ]
    return Molecule(atoms, bonds)


def generate_isomers(
    atom_counts: dict[str, int], n: int, seed: int = 0, max_tries: int | None = None
) -> list[Molecule]:
    """Distinct (by canonical form) random isomers of one formula."""
    rng = np.random.default_rng(seed)
    seen: dict[str, Molecule] = {}
    tries = 0
    limit = max_tries or n * 200
    while len(seen) < n and tries < limit:
        tries += 1
        try:
            mol = random_tree_molecule(rng, atom_counts)
        except ValueError:
            continue
        canon = canonical_smiles(mol)
        if canon not in seen:
            mol.source_smiles = canon
            seen[canon] = mol
    return list(seen.values())


def _component_atoms(mol: Molecule, drop_bond: int) -> list[list[int]]:
    adj = [[] for _ in mol.atoms]
    for bi, bond in enumerate(mol.bonds):
        if bi == drop_bond:
            continue
        adj[bond.a].append(bond.b)
        adj[bond.b].append(bond.a)
    seen = [False] * len(mol.atoms)
    components = []
    for start in range(len(mol.atoms)):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            a = stack.pop()
            comp.append(a)
            for b in adj[a]:
                if not seen[b]:
                    seen[b] = True
                    stack.append(b)
        components.append(comp)
    return components


def _fragment_form(mol: Molecule, atom_ids: list[int]) -> str:
    index = {a: i for i, a in enumerate(atom_ids)}
    atoms = [mol.atoms[a] for a in atom_ids]
    bonds = [
        Bond(index[b.a], index[b.b], b.order)
        for b in mol.bonds
        if b.a in index and b.b in index
    ]
    return canonical_smiles(Molecule(atoms, bonds))


def _fragment_mass(mol: Molecule, atom_ids: list[int]) -> float:
    total = 0.0
    h_mass = MONOISOTOPIC_MASS["H"]
    for a in atom_ids:
        atom = mol.atoms[a]
        total += MONOISOTOPIC_MASS[atom.symbol] + atom.implicit_h * h_mass
    return total + h_mass  # hydrogen transferred to the charged fragment


def _hash_unit(text: str) -> float:
    return _fnv1a(text.encode()) / 2.0**64


def fragment_spectrum(mol: Molecule, n_bins: int) -> BinnedSpectrum:
    """Deterministic ground-truth spectrum from single-bond fragmentation."""
    peaks = [(monoisotopic_mass(mol) + PROTON, 1.0)]
    for bi in range(len(mol.bonds)):
        for comp in _component_atoms(mol, bi):
            if len(comp) == len(mol.atoms):
                continue
            mass = _fragment_mass(mol, comp) + PROTON - MONOISOTOPIC_MASS["H"]
            intensity = 0.2 + 0.8 * _hash_unit(_fragment_form(mol, comp))
            peaks.append((mass, intensity))
    spectrum = bin_peaks(
        peaks,
        n_bins,
        precursor_mz=monoisotopic_mass(mol) + PROTON,
        instrument=InstrumentSetting("[M+H]+", 0.35),
    )
    return spectrum


DEFAULT_FORMULAS = (
    {"C": 4, "N": 1, "O": 1},
    {"C": 5, "O": 2},
    {"C": 4, "N": 2},
    {"C": 5, "N": 1, "O": 1},
    {"C": 3, "N": 2, "O": 1},
    {"C": 6, "O": 1},
    {"C": 4, "N": 1, "O": 2},
    {"C": 5, "N": 2},
)


def synthetic_dataset(
    n_molecules: int = 200,
    n_bins: int = 256,
    seed: int = 0,
    formulas=DEFAULT_FORMULAS,
):
    """(molecule_id, Molecule, [BinnedSpectrum]) records spread over formulas
    chosen so each formula group holds many isomers."""
    per_formula = -(-n_molecules // len(formulas))
    records = []
    for fi, counts in enumerate(formulas):
        for mi, mol in enumerate(generate_isomers(counts, per_formula, seed=seed + fi)):
            records.append((f"syn{fi:02d}_{mi:03d}", mol, [fragment_spectrum(mol, n_bins)]))
    return records[:n_molecules]


def synthetic_catalog(records) -> dict[str, list]:
    """Candidate catalog view of synthetic records, keyed by formula text."""
    from .chem.molecule import molecular_formula

    catalog: dict[str, list] = {}
    for mol_id, mol, _ in records:
        catalog.setdefault(str(molecular_formula(mol)), []).append((mol_id, mol))
    return catalog
