"""Dataset assembly: spectra-to-molecule matching, per-molecule spectrum
sampling, and molecule-level train/val/test splits (random and
structure-clustered)."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from .chem.catalog import load_molecule_table
from .chem.fingerprint import circular_fingerprint, tanimoto
from .chem.molecule import Molecule, molecular_formula, monoisotopic_mass
from .chem.smiles import parse_smiles
from .spectra.msp import parse_msp
from .spectra.spectrum import (
    BinnedSpectrum,
    InstrumentSetting,
    adduct_shift,
    bin_peaks,
    l2_normalize,
)

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "val", "test")


class FewerMoleculesThanClusters(ValueError):
    pass


@dataclass
class RawSpectrum:
    peaks: list[tuple[float, float]]
    precursor_mz: float = 0.0
    precursor_type: str = "[M+H]+"
    collision_energy: float = 0.0  # raw NCE units
    extra: dict = field(default_factory=dict)

    def setting(self, collision_norm: float = 100.0) -> InstrumentSetting:
        energy = min(max(self.collision_energy / collision_norm, 0.0), 1.0)
        return InstrumentSetting(self.precursor_type, energy)

    def binned(self, n_bins: int, collision_norm: float = 100.0,
               fallback_mass: float | None = None) -> BinnedSpectrum:
        mz = self.precursor_mz if self.precursor_mz > 0 else (fallback_mass or 0.0)
        return bin_peaks(self.peaks, n_bins, precursor_mz=mz,
                         instrument=self.setting(collision_norm))


@dataclass
class MoleculeRecord:
    molecule_id: str
    molecule: Molecule
    spectra: list[RawSpectrum]


def ingest_dataset(msp_stream, molecules_stream, strict: bool = False):
    """Join an MSP library with a molecule table on Name <-> id.

    Returns (records, stats). Spectra with no matching molecule and
    molecules with no spectra are dropped and counted.
    """
    rows, rejected = load_molecule_table(molecules_stream, strict=strict)
    by_id = {mol_id: mol for mol_id, mol in rows}
    spectra: dict[str, list[RawSpectrum]] = {}
    unmatched = 0
    for peaks, metadata in parse_msp(msp_stream):
        name = metadata.get("Name", "")
        if name not in by_id:
            unmatched += 1
            continue
        known = {"Name", "PrecursorMZ", "Precursor_type", "Collision_energy"}
        spectra.setdefault(name, []).append(
            RawSpectrum(
                peaks=peaks,
                precursor_mz=float(metadata.get("PrecursorMZ", 0.0) or 0.0),
                precursor_type=metadata.get("Precursor_type", "[M+H]+"),
                collision_energy=float(metadata.get("Collision_energy", 0.0) or 0.0),
                extra={k: v for k, v in metadata.items() if k not in known},
            )
        )
    records = [
        MoleculeRecord(mol_id, mol, spectra[mol_id])
        for mol_id, mol in rows
        if mol_id in spectra
    ]
    stats = {
        "molecules": len(records),
        "spectra": sum(len(r.spectra) for r in records),
        "unmatched_spectra": unmatched,
        "rejected_molecules": rejected,
        "spectrumless_molecules": len(rows) - len(records),
    }
    return records, stats


def save_dataset(records: list[MoleculeRecord], path: str | Path):
    with open(path, "w") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.molecule_id,
                        "smiles": rec.molecule.source_smiles,
                        "formula": str(molecular_formula(rec.molecule)),
                        "spectra": [
                            {
                                "peaks": [[round(mz, 5), round(i, 5)] for mz, i in s.peaks],
                                "precursor_mz": s.precursor_mz,
                                "precursor_type": s.precursor_type,
                                "collision_energy": s.collision_energy,
                            }
                            for s in rec.spectra
                        ],
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_dataset(path: str | Path) -> list[MoleculeRecord]:
    records = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            records.append(
                MoleculeRecord(
                    molecule_id=obj["id"],
                    molecule=parse_smiles(obj["smiles"]),
                    spectra=[
                        RawSpectrum(
                            peaks=[tuple(p) for p in s["peaks"]],
                            precursor_mz=s["precursor_mz"],
                            precursor_type=s["precursor_type"],
                            collision_energy=s["collision_energy"],
                        )
                        for s in obj["spectra"]
                    ],
                )
            )
    return records


def sample_spectra(records, max_n: int = 5, seed: int = 0):
    """Cap spectra per molecule: molecules over the cap get max_n draws with
    replacement (duplicates retained), the rest keep everything."""
    import zlib

    out = []
    for rec in records:
        spectra = rec.spectra
        if len(spectra) > max_n:
            rng = np.random.default_rng((seed, zlib.crc32(rec.molecule_id.encode())))
            idx = rng.integers(0, len(spectra), size=max_n)
            spectra = [spectra[i] for i in idx]
        out.append(MoleculeRecord(rec.molecule_id, rec.molecule, list(spectra)))
    return out


def split_random(molecule_ids, seed: int = 0, ratios=(8, 1, 1)) -> dict[str, str]:
    """Molecule-level split at the given ratios; returns id -> split name."""
    ids = list(molecule_ids)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    total = sum(ratios)
    n_train = int(len(ids) * ratios[0] / total)
    n_val = int(len(ids) * (ratios[0] + ratios[1]) / total) - n_train
    assignment = {}
    for pos, idx in enumerate(order):
        if pos < n_train:
            split = "train"
        elif pos < n_train + n_val:
            split = "val"
        else:
            split = "test"
        assignment[ids[idx]] = split
    return assignment


def upgma_clusters(molecules, n_clusters: int, fp_radius: int = 2,
                   fp_bits: int = 2048) -> np.ndarray:
    """Average-linkage clustering on (1 - tanimoto) fingerprint distances."""
    n = len(molecules)
    if n < n_clusters:
        raise FewerMoleculesThanClusters(f"{n} molecules for {n_clusters} clusters")
    fps = [circular_fingerprint(m, fp_radius, fp_bits) for m in molecules]
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = 1.0 - tanimoto(fps[i], fps[j])
            dist[i, j] = dist[j, i] = d
    tree = linkage(squareform(dist, checks=False), method="average")
    return fcluster(tree, t=n_clusters, criterion="maxclust")


def split_realistic(
    molecule_ids,
    molecules,
    n_clusters: int = 50,
    train_clusters: int = 29,
    seed: int = 0,
    val_fraction: float = 1.0 / 9.0,
    fp_radius: int = 2,
    fp_bits: int = 2048,
) -> dict[str, str]:
    """Structure-clustered split: the largest `train_clusters` clusters go to
    training (with a random validation carve-out), the rest to test."""
    labels = upgma_clusters(molecules, n_clusters, fp_radius, fp_bits)
    sizes = {}
    for label in labels:
        sizes[label] = sizes.get(label, 0) + 1
    ordered = sorted(sizes, key=lambda l: (-sizes[l], l))
    train_set = set(ordered[:train_clusters])
    ids = list(molecule_ids)
    train_ids = [i for i, label in zip(ids, labels) if label in train_set]
    test_ids = [i for i, label in zip(ids, labels) if label not in train_set]
    rng = np.random.default_rng(seed)
    n_val = int(round(len(train_ids) * val_fraction))
    val_pick = set(rng.permutation(len(train_ids))[:n_val])
    assignment = {}
    for pos, mol_id in enumerate(train_ids):
        assignment[mol_id] = "val" if pos in val_pick else "train"
    for mol_id in test_ids:
        assignment[mol_id] = "test"
    return assignment


def save_splits(assignment: dict[str, str], path: str | Path):
    by_split = {name: [] for name in SPLIT_NAMES}
    for mol_id in sorted(assignment):
        by_split[assignment[mol_id]].append(mol_id)
    Path(path).write_text(json.dumps(by_split, indent=1, sort_keys=True) + "\n")


def load_splits(path: str | Path) -> dict[str, str]:
    by_split = json.loads(Path(path).read_text())
    return {
        mol_id: split for split in SPLIT_NAMES for mol_id in by_split.get(split, [])
    }


@dataclass
class TrainingExample:
    """One (molecule, spectrum) pair prepared for the optimizer."""

    molecule_index: int
    molecule: Molecule
    setting: InstrumentSetting
    anchor: int
    target: np.ndarray  # L2-normalized binned intensities
    topic_label: np.ndarray | None = None
    query_id: str = ""


def prepare_examples(records, config, split: dict[str, str] | None = None,
                     subset: str | None = None) -> list[TrainingExample]:
    """Bin, normalize, and anchor every (molecule, spectrum) pair."""
    import warnings

    from .heads import precursor_bin
    from .spectra.spectrum import ZeroVectorWarning

    examples = []
    for mol_index, rec in enumerate(records):
        if split is not None and subset is not None:
            if split.get(rec.molecule_id) != subset:
                continue
        mass = monoisotopic_mass(rec.molecule)
        for spectrum in rec.spectra:
            fallback = mass + adduct_shift(spectrum.precursor_type)
            binned = spectrum.binned(config.n_bins, config.collision_norm, fallback)
            if binned.total() == 0.0:
                logger.warning("skipping empty spectrum for %s", rec.molecule_id)
                continue
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ZeroVectorWarning)
                normalized = l2_normalize(binned, config.sqrt_intensity)
            examples.append(
                TrainingExample(
                    molecule_index=mol_index,
                    molecule=rec.molecule,
                    setting=spectrum.setting(config.collision_norm),
                    anchor=precursor_bin(binned.precursor_mz, config.n_bins),
                    target=normalized.intensities,
                    query_id=rec.molecule_id,
                )
            )
    return examples
