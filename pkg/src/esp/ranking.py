"""Formula-matched candidate sets, similarity ranking, and metrics.

The target's rank uses the mid-rank tie rule:
rank = 1 + #{candidates scoring strictly higher} + #{other candidates tying}/2,
which makes fractional average ranks well defined and order-independent.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .chem.fingerprint import circular_fingerprint, tanimoto
from .chem.molecule import Molecule, molecular_formula
from .chem.smiles import canonical_smiles
from .spectra.spectrum import BinnedSpectrum, cosine_similarity

logger = logging.getLogger(__name__)


class EmptyCandidateSet(ValueError):
    pass


class TargetIndexOutOfRange(IndexError):
    pass


@dataclass
class CandidateSet:
    """A target molecule, its query spectrum, and formula-matched candidates."""

    target: Molecule
    candidates: list[Molecule]
    query: BinnedSpectrum | None = None
    target_index: int = 0
    shortfall: int = 0
    query_id: str = ""
    candidate_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.candidates:
            raise EmptyCandidateSet("candidate set is empty")
        if not 0 <= self.target_index < len(self.candidates):
            raise TargetIndexOutOfRange(
                f"target index {self.target_index} outside 0..{len(self.candidates) - 1}"
            )
        formula = molecular_formula(self.target)
        for mol in self.candidates:
            if molecular_formula(mol) != formula:
                raise ValueError(
                    f"candidate formula {molecular_formula(mol)} != target {formula}"
                )
        target_form = canonical_smiles(self.target)
        hits = sum(1 for m in self.candidates if canonical_smiles(m) == target_form)
        if hits != 1:
            raise ValueError(f"target must appear exactly once, found {hits}")

    @property
    def is_singleton(self) -> bool:
        return len(self.candidates) == 1

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass
class RankResult:
    rank: float
    similarities: np.ndarray
    model_tag: str = ""
    target_index: int = 0


def mid_rank(similarities: np.ndarray, target_index: int) -> float:
    scores = np.asarray(similarities, dtype=np.float64)
    target = scores[target_index]
    higher = int(np.sum(scores > target))
    ties = int(np.sum(scores == target)) - 1
    return 1.0 + higher + ties / 2.0


def rank_candidates(
    query: BinnedSpectrum | np.ndarray,
    predicted,
    target_index: int,
    model_tag: str = "",
) -> RankResult:
    """Rank the target by cosine similarity of predictions to the query."""
    if len(predicted) == 0:
        raise EmptyCandidateSet("no candidate predictions")
    if not 0 <= target_index < len(predicted):
        raise TargetIndexOutOfRange(
            f"target index {target_index} outside 0..{len(predicted) - 1}"
        )
    sims = np.array([cosine_similarity(query, p) for p in predicted])
    return RankResult(mid_rank(sims, target_index), sims, model_tag, target_index)


def average_rank(results) -> float:
    ranks = [r.rank if isinstance(r, RankResult) else float(r) for r in results]
    if not ranks:
        raise ValueError("no rank results")
    return float(np.mean(ranks))


def rank_at_k(results, k: float) -> float:
    ranks = [r.rank if isinstance(r, RankResult) else float(r) for r in results]
    if not ranks:
        raise ValueError("no rank results")
    return float(np.mean([rank <= k for rank in ranks]))


def stratify_by_formula(dataset) -> list[CandidateSet]:
    """Group (molecule, spectrum) pairs by formula into candidate sets.

    Each spectrum becomes one query; its candidates are the distinct
    molecules of its formula group (target included). Singleton groups are
    emitted too, flagged via `is_singleton`; downstream ensemble training
    excludes them.
    """
    groups: dict[str, list[tuple[Molecule, str]]] = {}
    entries = []
    for item in dataset:
        if len(item) == 3:
            mol_id, mol, spectrum = item
        else:
            mol, spectrum = item
            mol_id = ""
        formula = str(molecular_formula(mol))
        canon = canonical_smiles(mol)
        bucket = groups.setdefault(formula, [])
        if canon not in {c for _, c in bucket}:
            bucket.append((mol, canon))
        entries.append((formula, mol, canon, spectrum, mol_id))

    sets = []
    for formula, mol, canon, spectrum, mol_id in entries:
        bucket = groups[formula]
        mols = [m for m, _ in bucket]
        index = next(i for i, (_, c) in enumerate(bucket) if c == canon)
        sets.append(
            CandidateSet(
                target=mol,
                candidates=mols,
                query=spectrum,
                target_index=index,
                query_id=mol_id,
            )
        )
    return sets


def load_candidate_catalog(stream, strict: bool = False):
    """Catalog TSV `formula<TAB>id<TAB>smiles` keyed by canonical formula.

    Rows whose declared formula mismatches the one recomputed from the
    SMILES are rejected in strict mode (with a diagnostic) and re-keyed by
    the recomputed formula otherwise. Returns (catalog, rejected count).
    """
    from .chem.molecule import MoleculeError
    from .chem.smiles import SmilesError, parse_smiles

    catalog: dict[str, list[tuple[str, Molecule]]] = {}
    rejected = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 3:
            logger.warning("catalog line %d: expected formula<TAB>id<TAB>smiles", lineno)
            rejected += 1
            continue
        declared, mol_id, smiles = parts[0].strip(), parts[1], parts[2]
        try:
            mol = parse_smiles(smiles)
        except (SmilesError, MoleculeError) as exc:
            logger.warning("catalog line %d: bad SMILES %r: %s", lineno, smiles, exc)
            rejected += 1
            continue
        actual = str(molecular_formula(mol))
        if declared and declared != actual:
            if strict:
                logger.warning(
                    "catalog line %d (%s): declared formula %s != computed %s; rejected",
                    lineno,
                    mol_id,
                    declared,
                    actual,
                )
                rejected += 1
                continue
            logger.debug(
                "catalog line %d: re-keyed %s under computed formula %s",
                lineno,
                mol_id,
                actual,
            )
        catalog.setdefault(actual, []).append((mol_id, mol))
    if not catalog:
        logger.warning("candidate catalog is empty")
    return catalog, rejected


def sample_candidates(
    catalog,
    target: Molecule,
    size: int,
    mode: str = "random",
    seed: int = 0,
    fp_radius: int = 2,
    fp_bits: int = 2048,
) -> CandidateSet:
    """Draw a candidate set of `size` molecules (target always included).

    `most_similar` / `least_similar` order the catalog entry by fingerprint
    similarity to the target; `random` samples reproducibly by seed. When the
    catalog holds fewer molecules than requested, everything is used and the
    shortfall recorded on the set.
    """
    if mode not in ("random", "most_similar", "least_similar"):
        raise ValueError(f"unknown sampling mode {mode!r}")
    formula = str(molecular_formula(target))
    entry = catalog.get(formula, [])
    target_canon = canonical_smiles(target)
    others = [
        (mol_id, mol)
        for mol_id, mol in entry
        if canonical_smiles(mol) != target_canon
    ]
    want = max(size - 1, 0)
    if mode == "random":
        rng = np.random.default_rng(seed)
        picked_idx = rng.permutation(len(others))[:want]
        picked = [others[i] for i in sorted(picked_idx)]
    else:
        target_fp = circular_fingerprint(target, fp_radius, fp_bits)
        scored = [
            (tanimoto(target_fp, circular_fingerprint(mol, fp_radius, fp_bits)), mol_id, mol)
            for mol_id, mol in others
        ]
        reverse = mode == "most_similar"
        scored.sort(key=lambda t: (-t[0], t[1]) if reverse else (t[0], t[1]))
        picked = [(mol_id, mol) for _, mol_id, mol in scored[:want]]
    candidates = [target] + [mol for _, mol in picked]
    ids = ["target"] + [mol_id for mol_id, _ in picked]
    return CandidateSet(
        target=target,
        candidates=candidates,
        target_index=0,
        shortfall=max(0, size - len(candidates)),
        candidate_ids=ids,
    )
