"""Rank-trained blending of the two spectrum predictors.

Each training query gets a winner label (which predictor ranked the target
better; ties go to the fingerprint path) and an importance weight, the
symmetric mean absolute percentage error of the two ranks. A classifier on
the normalized query spectrum learns the label under weight-scaled BCE; at
inference its probability convexly blends the two predicted spectra.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .nn.layers import Dense
from .nn.losses import bce
from .nn.optim import Adam
from .nn.tape import Tensor
from .ranking import CandidateSet, RankResult, rank_candidates
from .spectra.spectrum import BinnedSpectrum

logger = logging.getLogger(__name__)

LABEL_SOURCES = ("rank", "loss")
WEIGHTINGS = ("smape", "uniform")


class NoInformativeExamples(ValueError):
    """Every training example carries zero weight."""


def make_label(rank_mlp: float, rank_gnn: float) -> tuple[int, int]:
    """(d_mlp, d_gnn); the fingerprint path wins ties."""
    d_mlp = 1 if rank_mlp <= rank_gnn else 0
    return d_mlp, 1 - d_mlp


def smape_weight(rank_mlp: float, rank_gnn: float) -> float:
    """|rank_gnn - rank_mlp| / (rank_gnn + rank_mlp), in [0, 1)."""
    if rank_mlp < 1 or rank_gnn < 1:
        raise ValueError("ranks must be >= 1")
    return abs(rank_gnn - rank_mlp) / (rank_gnn + rank_mlp)


def loss_label(loss_mlp: float, loss_gnn: float) -> tuple[int, int]:
    """Winner by smaller spectral loss (the ESP-SL ablation)."""
    d_mlp = 1 if loss_mlp <= loss_gnn else 0
    return d_mlp, 1 - d_mlp


def loss_weight(loss_mlp: float, loss_gnn: float) -> float:
    """Weight proportional to the spectral-loss gap.

    Cosine losses live in [-1, 0], so the absolute difference is already a
    bounded [0, 1] weight.
    """
    return abs(loss_gnn - loss_mlp)


@dataclass
class EnsembleExample:
    query: np.ndarray  # L2-normalized binned query spectrum
    rank_mlp: float
    rank_gnn: float
    d_mlp: int
    gamma: float
    query_id: str = ""

    @classmethod
    def from_ranks(cls, query, rank_mlp, rank_gnn, query_id="") -> "EnsembleExample":
        d_mlp, _ = make_label(rank_mlp, rank_gnn)
        return cls(
            query=_normalized(query),
            rank_mlp=rank_mlp,
            rank_gnn=rank_gnn,
            d_mlp=d_mlp,
            gamma=smape_weight(rank_mlp, rank_gnn),
            query_id=query_id,
        )


def _normalized(query) -> np.ndarray:
    vec = query.intensities if isinstance(query, BinnedSpectrum) else np.asarray(query, dtype=np.float64)
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec.copy()


class EnsembleClassifier:
    """Feedforward net on the normalized query spectrum; sigmoid output is
    the probability that the fingerprint path ranks the target better."""

    def __init__(self, n_bins: int, hidden: int, rng: np.random.Generator):
        self.h1 = Dense(n_bins, hidden, "relu", rng)
        self.h2 = Dense(hidden, hidden, "relu", rng)
        self.out = Dense(hidden, 1, "sigmoid", rng)
        self.n_bins = n_bins

    def forward(self, queries) -> Tensor:
        x = queries if isinstance(queries, Tensor) else Tensor(queries)
        out = self.out(self.h2(self.h1(x)))
        return out

    def predict(self, query) -> float:
        """d_mlp probability for one query spectrum (normalized internally)."""
        return float(self.forward(_normalized(query)).data.reshape(-1)[0])

    def parameters(self, prefix: str = "ens") -> dict[str, Tensor]:
        return {
            **self.h1.parameters(f"{prefix}.h1"),
            **self.h2.parameters(f"{prefix}.h2"),
            **self.out.parameters(f"{prefix}.out"),
        }


def train_ensemble(
    examples: list[EnsembleExample],
    n_bins: int,
    hidden: int = 512,
    lr: float = 1e-3,
    epochs: int = 200,
    batch_size: int = 64,
    weighting: str = "smape",
    weight_decay: float = 0.0,
    seed: int = 0,
    validation_fn=None,
    patience: int = 20,
) -> EnsembleClassifier:
    """Fit the classifier under weight-scaled BCE with Adam.

    `validation_fn(classifier) -> float` scores a snapshot (lower is better,
    e.g. blended validation average rank); when given, the best-scoring
    parameters are restored at the end and training stops after `patience`
    non-improving epochs.
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}")
    weights = np.array(
        [1.0 if weighting == "uniform" else ex.gamma for ex in examples]
    )
    if len(examples) == 0 or not np.any(weights > 0):
        raise NoInformativeExamples(
            "all ensemble examples carry zero weight; nothing to learn"
        )
    queries = np.stack([ex.query for ex in examples])
    labels = np.array([ex.d_mlp for ex in examples], dtype=np.float64)

    rng = np.random.default_rng(seed)
    clf = EnsembleClassifier(n_bins, hidden, rng)
    opt = Adam(clf.parameters(), lr=lr, weight_decay=weight_decay)

    best_score = np.inf
    best_params = None
    since_best = 0
    n = len(examples)
    for epoch in range(epochs):
        order = np.random.default_rng((seed, epoch)).permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            opt.zero_grad()
            probs = clf.forward(queries[idx])
            loss = bce(
                probs, labels[idx].reshape(-1, 1), weights[idx].reshape(-1, 1)
            )
            loss.backward()
            opt.step()
        if validation_fn is not None:
            score = validation_fn(clf)
            if score < best_score:
                best_score = score
                best_params = {
                    name: p.data.copy() for name, p in clf.parameters().items()
                }
                since_best = 0
            else:
                since_best += 1
                if since_best >= patience:
                    logger.info("ensemble early stop at epoch %d", epoch + 1)
                    break
    if best_params is not None:
        for name, p in clf.parameters().items():
            p.data = best_params[name]
    return clf


def blend(d_mlp_prob: float, y_mlp: np.ndarray, y_gnn: np.ndarray) -> np.ndarray:
    """Convex combination of the two predicted spectra."""
    if not 0.0 <= d_mlp_prob <= 1.0:
        raise ValueError(f"blend probability {d_mlp_prob} outside [0,1]")
    return d_mlp_prob * np.asarray(y_mlp) + (1.0 - d_mlp_prob) * np.asarray(y_gnn)


def esp_rank(
    query,
    candidate_set: CandidateSet,
    mlp_model,
    gnn_model,
    classifier: EnsembleClassifier | float,
    hard_blend: bool = False,
) -> RankResult:
    """Rank with the blended predictor.

    The blend probability is computed once from the query spectrum (or taken
    directly when `classifier` is a float, which the reduction tests use).
    Model arguments are predict callables or objects with
    predict(molecule) -> spectrum vector.
    """
    predict_mlp = getattr(mlp_model, "predict", mlp_model)
    predict_gnn = getattr(gnn_model, "predict", gnn_model)
    if isinstance(classifier, (int, float)):
        d_mlp = float(classifier)
    else:
        d_mlp = classifier.predict(query)
    if hard_blend:
        d_mlp = 1.0 if d_mlp >= 0.5 else 0.0
    blended = [
        blend(d_mlp, predict_mlp(mol), predict_gnn(mol))
        for mol in candidate_set.candidates
    ]
    result = rank_candidates(query, blended, candidate_set.target_index, model_tag="esp")
    return result
