"""Element data: monoisotopic masses and standard valences.

Masses are the most-abundant-isotope masses (in Da, good to at least five
decimal places). The isotope override table carries exact masses for the
isotopes that actually show up in small-molecule SMILES (deuterium, 13C,
15N, 18O, ...); any other declared mass number falls back to the nominal
integer value.
"""

MONOISOTOPIC_MASS = {
    "H": 1.0078250319,
    "B": 11.0093055,
    "C": 12.0,
    "N": 14.0030740052,
    "O": 15.9949146221,
    "F": 18.9984032,
    "Na": 22.98976928,
    "Mg": 23.9850419,
    "Al": 26.98153863,
    "Si": 27.9769265327,
    "P": 30.97376151,
    "S": 31.97207069,
    "Cl": 34.96885271,
    "K": 38.9637069,
    "Ca": 39.96259098,
    "Ti": 47.9479471,
    "Cr": 51.9405119,
    "Mn": 54.9380496,
    "Fe": 55.9349421,
    "Co": 58.9332002,
    "Ni": 57.9353479,
    "Cu": 62.9296011,
    "Zn": 63.9291422,
    "As": 74.9215964,
    "Se": 79.9165218,
    "Br": 78.9183376,
    "Ag": 106.905093,
    "Sn": 119.9021966,
    "I": 126.904468,
    "Au": 196.966552,
    "Hg": 201.970626,
    "Pb": 207.976636,
    "Li": 7.016004,
}

# Exact masses for explicitly declared isotopes, keyed (symbol, mass number).
ISOTOPE_MASS = {
    ("H", 1): 1.0078250319,
    ("H", 2): 2.014101778,
    ("H", 3): 3.0160492779,
    ("C", 12): 12.0,
    ("C", 13): 13.0033548378,
    ("C", 14): 14.003241989,
    ("N", 14): 14.0030740052,
    ("N", 15): 15.0001088984,
    ("O", 16): 15.9949146221,
    ("O", 17): 16.9991315,
    ("O", 18): 17.9991604,
    ("S", 34): 33.96786683,
    ("Cl", 37): 36.96590259,
    ("Br", 81): 80.9162906,
}

# Standard SMILES valences used to fill implicit hydrogens on organic-subset
# atoms (smallest value >= bond order sum wins).
STANDARD_VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

# Organic-subset symbols that may appear outside brackets.
ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}

# Elements that may be written lowercase (aromatic). "se"/"as" only in brackets.
AROMATIC_SYMBOLS = {"b", "c", "n", "o", "p", "s", "se", "as"}


def isotope_mass(symbol: str, mass_number: int | None) -> float:
    """Exact mass of one atom, honoring an isotope override when present."""
    if mass_number is None:
        return MONOISOTOPIC_MASS[symbol]
    exact = ISOTOPE_MASS.get((symbol, mass_number))
    if exact is not None:
        return exact
    return float(mass_number)
