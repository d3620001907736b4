"""Tab-separated molecule tables: `id<TAB>smiles[<TAB>formula]`.

The formula column is optional; when present it is checked against the
formula recomputed from the SMILES and the row wins or loses depending on
strictness.
"""

from __future__ import annotations

import logging
from typing import Iterable, TextIO

from .molecule import Molecule, MoleculeError, molecular_formula
from .smiles import SmilesError, parse_smiles

logger = logging.getLogger(__name__)


def load_molecule_table(stream: TextIO | Iterable[str], strict: bool = False):
    """Parse molecule rows; returns (list of (id, Molecule), rejected count).

    Rows that fail to parse, or whose declared formula mismatches the
    recomputed one in strict mode, are rejected with a log line.
    """
    rows: list[tuple[str, Molecule]] = []
    rejected = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            logger.warning("line %d: expected id<TAB>smiles, got %r", lineno, line)
            rejected += 1
            continue
        mol_id, smiles = fields[0], fields[1]
        declared = fields[2].strip() if len(fields) > 2 and fields[2].strip() else None
        try:
            mol = parse_smiles(smiles)
        except (SmilesError, MoleculeError) as exc:
            logger.warning("line %d: bad SMILES %r: %s", lineno, smiles, exc)
            rejected += 1
            continue
        if declared is not None:
            actual = str(molecular_formula(mol))
            if declared != actual:
                if strict:
                    logger.warning(
                        "line %d: declared formula %s does not match computed %s",
                        lineno,
                        declared,
                        actual,
                    )
                    rejected += 1
                    continue
                logger.debug(
                    "line %d: recomputed formula %s (declared %s)",
                    lineno,
                    actual,
                    declared,
                )
        rows.append((mol_id, mol))
    return rows, rejected
