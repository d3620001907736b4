from .elements import MONOISOTOPIC_MASS
from .fingerprint import Fingerprint, circular_fingerprint, tanimoto
from .molecule import (
    Atom,
    Bond,
    EmptyMolecule,
    Formula,
    Molecule,
    MoleculeError,
    UnknownElement,
    molecular_formula,
    monoisotopic_mass,
)
from .smiles import (
    SmilesError,
    SmilesFeatureWarning,
    UnbalancedParenthesis,
    UnbalancedRingClosure,
    ValenceOverflow,
    canonical_ranks,
    canonical_smiles,
    parse_smiles,
    write_smiles,
)

__all__ = [
    "Atom",
    "Bond",
    "EmptyMolecule",
    "Fingerprint",
    "Formula",
    "MONOISOTOPIC_MASS",
    "Molecule",
    "MoleculeError",
    "SmilesError",
    "SmilesFeatureWarning",
    "UnbalancedParenthesis",
    "UnbalancedRingClosure",
    "UnknownElement",
    "ValenceOverflow",
    "canonical_ranks",
    "canonical_smiles",
    "circular_fingerprint",
    "molecular_formula",
    "monoisotopic_mass",
    "parse_smiles",
    "tanimoto",
    "write_smiles",
]
