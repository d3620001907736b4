"""Topic model over peak documents: fitting and per-document inference."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._gibbs_py import next_double, splitmix64_next


class TooFewDocuments(ValueError):
    """Fitting needs at least as many non-empty documents as topics."""


class EmptyVocabulary(ValueError):
    """No tokens at all in the corpus."""


@dataclass
class TopicModel:
    phi: np.ndarray  # (T, V) topic-word rows on the simplex
    alpha: float
    beta: float
    seed: int
    log_likelihood: list[float] = field(default_factory=list)

    @property
    def n_topics(self) -> int:
        return self.phi.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.phi.shape[1]


def _expand_tokens(docs, vocab_size):
    """Flatten word->count maps into parallel (doc_id, word_id) token arrays."""
    doc_ids = []
    word_ids = []
    for d, doc in enumerate(docs):
        for w in sorted(doc):
            c = doc[w]
            if c < 1 or int(c) != c:
                raise ValueError(f"document {d}: count for word {w} must be a positive integer")
            if not 0 <= w < vocab_size:
                raise ValueError(f"document {d}: word id {w} outside vocabulary [0,{vocab_size})")
            doc_ids.extend([d] * int(c))
            word_ids.extend([w] * int(c))
    return (
        np.asarray(doc_ids, dtype=np.int32),
        np.asarray(word_ids, dtype=np.int32),
    )


def _corpus_log_likelihood(counts_dw, n_dt, n_d, n_tw, n_t, alpha, beta):
    theta = (n_dt + alpha) / (n_d + n_dt.shape[1] * alpha)[:, None]
    phi = (n_tw + beta) / (n_t + n_tw.shape[1] * beta)[:, None]
    p = theta @ phi
    mask = counts_dw > 0
    return float(np.sum(counts_dw[mask] * np.log(p[mask])))


def fit_lda(
    docs,
    n_topics: int = 100,
    alpha: float | None = None,
    beta: float | None = None,
    iters: int = 200,
    seed: int = 0,
    vocab_size: int = 1000,
    kernel=None,
    track_likelihood: bool = False,
) -> TopicModel:
    """Fit by collapsed Gibbs sampling; deterministic for a given seed.

    `docs` are word->count maps with word ids below `vocab_size`. Empty
    documents are skipped during fitting. alpha and beta default to
    1/n_topics.
    """
    if kernel is None:
        from . import _kernel

        kernel = _kernel
    if n_topics < 2:
        raise ValueError("need at least 2 topics")
    alpha = 1.0 / n_topics if alpha is None else alpha
    beta = 1.0 / n_topics if beta is None else beta

    nonempty = [doc for doc in docs if doc]
    if len(nonempty) < n_topics:
        raise TooFewDocuments(
            f"{len(nonempty)} non-empty documents for {n_topics} topics"
        )
    doc_ids, word_ids = _expand_tokens(nonempty, vocab_size)
    if len(word_ids) == 0:
        raise EmptyVocabulary("corpus contains no tokens")

    n_docs = len(nonempty)
    state = (seed * 0x9E3779B97F4A7C15 + 1) & 0xFFFFFFFFFFFFFFFF
    z = np.empty(len(word_ids), dtype=np.int32)
    for i in range(len(z)):
        state, bits = splitmix64_next(state)
        z[i] = bits % n_topics

    n_tw = np.zeros((n_topics, vocab_size), dtype=np.float64)
    n_t = np.zeros(n_topics, dtype=np.float64)
    n_dt = np.zeros((n_docs, n_topics), dtype=np.float64)
    np.add.at(n_tw, (z, word_ids), 1.0)
    np.add.at(n_t, z, 1.0)
    np.add.at(n_dt, (doc_ids, z), 1.0)

    counts_dw = None
    n_d = None
    trace: list[float] = []
    if track_likelihood:
        counts_dw = np.zeros((n_docs, vocab_size), dtype=np.float64)
        np.add.at(counts_dw, (doc_ids, word_ids), 1.0)
        n_d = counts_dw.sum(axis=1)

    for _ in range(iters):
        state = kernel.sweep(z, doc_ids, word_ids, n_tw, n_t, n_dt, alpha, beta, state)
        if track_likelihood:
            trace.append(
                _corpus_log_likelihood(counts_dw, n_dt, n_d, n_tw, n_t, alpha, beta)
            )

    phi = (n_tw + beta) / (n_t + vocab_size * beta)[:, None]
    return TopicModel(phi=phi, alpha=alpha, beta=beta, seed=seed, log_likelihood=trace)


FOLD_IN_ITERS = 50
FOLD_IN_BURN = 20


def transform(model: TopicModel, doc, seed: int = 0) -> np.ndarray:
    """Topic distribution for one document by fold-in Gibbs with fixed phi.

    Empty documents get the uniform prior distribution. Deterministic given
    (model, doc, seed).
    """
    n_topics = model.n_topics
    if not doc:
        return np.full(n_topics, 1.0 / n_topics)
    words = []
    for w in sorted(doc):
        if not 0 <= w < model.vocab_size:
            raise ValueError(f"word id {w} outside vocabulary [0,{model.vocab_size})")
        words.extend([w] * int(doc[w]))
    words = np.asarray(words, dtype=np.int64)

    state = ((model.seed ^ (seed + 0x5851F42D4C957F2D)) * 0x9E3779B97F4A7C15 + 1) & 0xFFFFFFFFFFFFFFFF
    z = np.empty(len(words), dtype=np.int64)
    for i in range(len(z)):
        state, bits = splitmix64_next(state)
        z[i] = bits % n_topics

    counts = np.zeros(n_topics, dtype=np.float64)
    np.add.at(counts, z, 1.0)
    accum = np.zeros(n_topics, dtype=np.float64)
    kept = 0
    for sweep_idx in range(FOLD_IN_ITERS):
        for i in range(len(words)):
            w = words[i]
            counts[z[i]] -= 1.0
            probs = model.phi[:, w] * (counts + model.alpha)
            cum = np.cumsum(probs)
            state, u = next_double(state)
            t_new = int(np.searchsorted(cum, u * cum[-1], side="right"))
            if t_new >= n_topics:
                t_new = n_topics - 1
            z[i] = t_new
            counts[t_new] += 1.0
        if sweep_idx >= FOLD_IN_BURN:
            accum += counts
            kept += 1
    avg = accum / kept
    theta = (avg + model.alpha) / (len(words) + n_topics * model.alpha)
    return theta / theta.sum()
