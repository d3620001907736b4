import io
import random

import numpy as np
import pytest

from esp.chem import parse_smiles
from esp.ranking import (
    CandidateSet,
    EmptyCandidateSet,
    TargetIndexOutOfRange,
    average_rank,
    load_candidate_catalog,
    mid_rank,
    rank_at_k,
    rank_candidates,
    sample_candidates,
    stratify_by_formula,
)
from esp.spectra import BinnedSpectrum
from esp.synthetic import fragment_spectrum, generate_isomers


def brute_force_mid_rank(similarities, target_index):
    """Independent oracle: stable sort positions, average within tie group."""
    order = sorted(range(len(similarities)), key=lambda i: -similarities[i])
    positions = {idx: pos + 1 for pos, idx in enumerate(order)}
    tied = [i for i in range(len(similarities)) if similarities[i] == similarities[target_index]]
    return sum(positions[i] for i in tied) / len(tied)


def test_rank_strictly_highest():
    sims = np.array([0.9, 0.5, 0.2])
    assert mid_rank(sims, 0) == 1.0


def test_rank_tied_at_top():
    sims = np.array([0.9, 0.9, 0.2])
    assert mid_rank(sims, 0) == 1.5
    assert mid_rank(sims, 1) == 1.5


def test_rank_matches_brute_force_oracle():
    rng = random.Random(13)
    for _ in range(1000):
        n = rng.randint(1, 20)
        # quantized similarities force plenty of ties
        sims = np.array([rng.randint(0, 8) / 8.0 for _ in range(n)])
        target = rng.randrange(n)
        assert mid_rank(sims, target) == brute_force_mid_rank(sims, target)


def test_rank_candidates_uses_cosine():
    query = BinnedSpectrum(np.array([1.0, 0.0, 0.0, 0.0]))
    predictions = [
        np.array([1.0, 0.0, 0.0, 0.0]),  # identical: sim 1
        np.array([1.0, 1.0, 0.0, 0.0]),  # sim ~0.707
        np.array([0.0, 0.0, 1.0, 0.0]),  # sim 0
    ]
    result = rank_candidates(query, predictions, target_index=1)
    assert result.rank == 2.0
    assert result.similarities[0] == pytest.approx(1.0)


def test_rank_candidates_errors():
    query = BinnedSpectrum(np.ones(4))
    with pytest.raises(EmptyCandidateSet):
        rank_candidates(query, [], 0)
    with pytest.raises(TargetIndexOutOfRange):
        rank_candidates(query, [np.ones(4)], 3)


def test_rank_invariances():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(2, 15))
        sims = rng.integers(0, 5, size=n) / 4.0
        target = int(rng.integers(n))
        base = mid_rank(sims, target)
        perm = rng.permutation(n)
        inv = np.argsort(perm)
        assert mid_rank(sims[perm], int(inv[target])) == base
        # strictly monotone transform of scores leaves ranks alone
        assert mid_rank(np.exp(3 * sims), target) == base


def test_superset_monotonicity():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = 30
        sims = rng.random(n)
        sims[rng.integers(n, size=8)] = 0.5  # inject ties
        subset = rng.permutation(n)[:12]
        target = int(subset[0])
        small = mid_rank(sims[np.sort(subset)], int(np.where(np.sort(subset) == target)[0][0]))
        big = mid_rank(sims, target)
        assert small <= big


def test_metrics():
    assert average_rank([1.0, 1.0]) == 1.0
    assert rank_at_k([1.0, 1.0], 1) == 1.0
    assert rank_at_k([1.0, 3.0], 1) == 0.5
    assert rank_at_k([1.0, 3.0], 3) == 1.0
    ranks = [1.0, 2.5, 7.0, 3.0]
    for k in range(1, 9):
        assert rank_at_k(ranks, k) <= rank_at_k(ranks, k + 1)


def test_stratify_by_formula():
    # aromatic and Kekule benzene are distinct graphs here (no aromaticity
    # re-perception), so they form one two-candidate C6H6 group
    mols = [parse_smiles(s) for s in ["c1ccccc1", "C1=CC=CC=C1", "CCO"]]
    spectra = [BinnedSpectrum(np.ones(4)) for _ in mols]
    sets = stratify_by_formula(list(zip(mols, spectra)))
    assert len(sets) == 3
    sizes = sorted(len(s) for s in sets)
    assert sizes == [1, 2, 2]

    isomers = generate_isomers({"C": 4, "O": 1}, 3, seed=2)
    dataset = [(m, BinnedSpectrum(np.ones(4))) for m in isomers] + [
        (parse_smiles("CCO"), BinnedSpectrum(np.ones(4)))
    ]
    sets = stratify_by_formula(dataset)
    assert len(sets) == 4
    assert sorted(len(s) for s in sets) == [1, 3, 3, 3]
    assert sum(s.is_singleton for s in sets) == 1
    # each query's candidate list contains its target exactly once
    for cs in sets:
        assert cs.candidates[cs.target_index] is cs.target


def _toy_catalog(n=20, seed=3):
    mols = generate_isomers({"C": 5, "O": 1}, n, seed=seed)
    return {"C5H12O": [(f"c{i}", m) for i, m in enumerate(mols)]}, mols


def test_sample_candidates_modes():
    catalog, mols = _toy_catalog()
    target = mols[0]
    picked = sample_candidates(catalog, target, size=10, mode="most_similar")
    assert len(picked) == 10
    assert picked.candidates[0] is target
    assert picked.shortfall == 0

    from esp.chem import circular_fingerprint, tanimoto

    target_fp = circular_fingerprint(target, 2, 2048)
    sims = sorted(
        (tanimoto(target_fp, circular_fingerprint(m, 2, 2048)) for m in mols[1:]),
        reverse=True,
    )
    got = sorted(
        (tanimoto(target_fp, circular_fingerprint(m, 2, 2048)) for m in picked.candidates[1:]),
        reverse=True,
    )
    assert got == sims[:9]

    least = sample_candidates(catalog, target, size=10, mode="least_similar")
    got_least = sorted(
        tanimoto(target_fp, circular_fingerprint(m, 2, 2048)) for m in least.candidates[1:]
    )
    assert got_least == sorted(sims)[:9]


def test_sample_candidates_random_reproducible():
    catalog, mols = _toy_catalog()
    a = sample_candidates(catalog, mols[0], size=8, mode="random", seed=5)
    b = sample_candidates(catalog, mols[0], size=8, mode="random", seed=5)
    assert [m.source_smiles for m in a.candidates] == [m.source_smiles for m in b.candidates]


def test_sample_candidates_shortfall():
    catalog, mols = _toy_catalog(n=5)
    picked = sample_candidates(catalog, mols[0], size=10, mode="random", seed=1)
    assert len(picked) == 5
    assert picked.shortfall == 5


def test_load_candidate_catalog():
    text = "C2H6O\ta\tCCO\nC2H6O\tb\tOCC\nC6H6\tc\tc1ccccc1\n"
    catalog, rejected = load_candidate_catalog(io.StringIO(text))
    assert rejected == 0
    assert len(catalog["C2H6O"]) == 2
    assert len(catalog["C6H6"]) == 1

    # declared formula wrong: rejected in strict mode, re-keyed otherwise
    bad = "C6H6\tx\tCCO\n"
    catalog, rejected = load_candidate_catalog(io.StringIO(bad), strict=True)
    assert rejected == 1 and not catalog
    catalog, rejected = load_candidate_catalog(io.StringIO(bad), strict=False)
    assert rejected == 0 and "C2H6O" in catalog

    catalog, rejected = load_candidate_catalog(io.StringIO(""))
    assert catalog == {} and rejected == 0


def test_candidate_set_invariants():
    mols = generate_isomers({"C": 4, "O": 1}, 3, seed=9)
    with pytest.raises(ValueError):
        CandidateSet(target=mols[0], candidates=[mols[1], mols[2]])  # target missing
    with pytest.raises(ValueError):
        CandidateSet(
            target=parse_smiles("CCO"),
            candidates=[parse_smiles("CCO"), parse_smiles("c1ccccc1")],
        )  # formula mismatch
    with pytest.raises(EmptyCandidateSet):
        CandidateSet(target=mols[0], candidates=[])


def test_rank_on_synthetic_fragments():
    mols = generate_isomers({"C": 5, "O": 2}, 12, seed=4)
    spectra = [fragment_spectrum(m, 256) for m in mols]
    # true spectrum as both query and "prediction": target must win
    for t in range(4):
        result = rank_candidates(spectra[t], [s.intensities for s in spectra], t)
        assert result.rank == 1.0
