"""Training loops, model selection on validation ranking, persistence."""

from __future__ import annotations

import logging

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .chem.molecule import molecular_formula, monoisotopic_mass
from .chem.smiles import canonical_smiles
from .config import Config
from .data import TrainingExample, prepare_examples
from .heads import precursor_bin, total_loss
from .lda.model import TopicModel, transform
from .models import SpectraPredictor
from .nn.optim import Adam
from .ranking import mid_rank
from .spectra.documents import to_peak_document
from .spectra.spectrum import BinnedSpectrum, adduct_shift

logger = logging.getLogger(__name__)


class DivergedLoss(RuntimeError):
    """Training loss went non-finite."""


def build_vocabularies(records, split=None):
    """Atom and precursor-type vocabularies from the training subset."""
    train_records = [
        r for r in records if split is None or split.get(r.molecule_id) == "train"
    ]
    if not train_records:
        train_records = records
    atoms = sorted({a.symbol for r in train_records for a in r.molecule.atoms})
    types = sorted({s.precursor_type for r in train_records for s in r.spectra})
    return atoms + ["OTHER"], types


def attach_topic_labels(examples: list[TrainingExample], topic_model: TopicModel,
                        quantization: int):
    for ex in examples:
        doc = to_peak_document(BinnedSpectrum(ex.target), quantization)
        ex.topic_label = transform(topic_model, doc)


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


class _ValidationRanker:
    """Formula-stratified validation candidate sets, ranked per snapshot."""

    def __init__(self, records, split, config: Config):
        examples = prepare_examples(records, config, split, "val")
        mols = {}
        queries = []
        for ex in examples:
            formula = str(molecular_formula(ex.molecule))
            canon = canonical_smiles(ex.molecule)
            mols.setdefault(formula, {})[canon] = ex
            queries.append((formula, canon, ex))
        self.groups = {
            formula: list(members.values()) for formula, members in mols.items()
        }
        self.queries = queries
        self.config = config

    def __bool__(self):
        return bool(self.queries)

    def average_rank(self, model: SpectraPredictor) -> float:
        if not self.queries:
            return float("nan")
        config = self.config
        ranks = []
        for formula, target_canon, query_ex in self.queries:
            members = self.groups[formula]
            settings = [query_ex.setting] * len(members)
            masses = [
                monoisotopic_mass(m.molecule)
                + adduct_shift(query_ex.setting.precursor_type)
                for m in members
            ]
            preds = model.predict_batch(
                [m.molecule for m in members], settings, masses
            )
            query_vec = query_ex.target
            sims = preds @ query_vec
            norms = np.linalg.norm(preds, axis=1)
            norms[norms == 0] = 1.0
            sims = sims / norms
            target_index = next(
                i for i, m in enumerate(members)
                if canonical_smiles(m.molecule) == target_canon
            )
            ranks.append(mid_rank(sims, target_index))
        return float(np.mean(ranks))


def train_model(
    kind: str,
    records,
    split: dict[str, str],
    config: Config,
    topic_model: TopicModel,
    out_path=None,
    resume_path=None,
) -> tuple[SpectraPredictor, dict]:
    """End-to-end training of one predictor on the train subset.

    Selection tracks the best validation average rank; the returned model
    carries the selected parameters, while the checkpoint additionally
    stores the live state so training can resume exactly.
    """
    atom_vocab, precursor_vocab = build_vocabularies(records, split)
    rng = np.random.default_rng(config.seed)
    model = SpectraPredictor(kind, config, atom_vocab, precursor_vocab, rng)
    params = model.parameters()
    optimizer = Adam(params, lr=config.lr, weight_decay=config.weight_decay)

    examples = prepare_examples(records, config, split, "train")
    if not examples:
        raise ValueError("no training examples after split filtering")
    attach_topic_labels(examples, topic_model, config.quantization)

    fp_cache = None
    if kind == "mlp-pd":
        cache = {}
        for ex in examples:
            if ex.molecule_index not in cache:
                cache[ex.molecule_index] = model.fingerprint_vector(ex.molecule)
        fp_cache = cache

    ranker = _ValidationRanker(records, split, config)
    start_epoch = 0
    best_metric = float("inf")
    best_params = {name: p.data.copy() for name, p in params.items()}

    if resume_path is not None:
        header, tensors = load_checkpoint(resume_path)
        if header["kind"] != kind:
            raise ValueError(f"resume checkpoint is {header['kind']}, not {kind}")
        model.set_parameters(
            {name[len("param."):]: t for name, t in tensors.items() if name.startswith("param.")}
        )
        optimizer.load_state_tensors(
            {name: t for name, t in tensors.items() if name.startswith("adam.")},
            header["extra"]["adam_step"],
        )
        best_params = {
            name[len("best."):]: t for name, t in tensors.items() if name.startswith("best.")
        }
        best_metric = header["extra"]["best_metric"]
        start_epoch = header["extra"]["epoch_next"]

    n = len(examples)
    since_best = 0
    for epoch in range(start_epoch, config.epochs):
        epoch_rng = np.random.default_rng((config.seed, epoch))
        dropout_rng = np.random.default_rng((config.seed, epoch, 1))
        for batch_idx in _batches(n, config.batch_size, epoch_rng):
            batch = [examples[i] for i in batch_idx]
            mols = [ex.molecule for ex in batch]
            settings = [ex.setting for ex in batch]
            anchors = np.array([ex.anchor for ex in batch])
            targets = np.stack([ex.target for ex in batch])
            topics = np.stack([ex.topic_label for ex in batch])
            fp_matrix = None
            if fp_cache is not None:
                fp_matrix = np.stack([fp_cache[ex.molecule_index] for ex in batch])
            optimizer.zero_grad()
            predicted, aux = model.forward_batch(
                mols, settings, anchors, fp_matrix,
                dropout_rng if config.dropout > 0 else None,
            )
            loss = total_loss(predicted, targets, aux, topics, config.aux_weight)
            loss_value = float(loss.data)
            if not np.isfinite(loss_value):
                raise DivergedLoss(
                    f"non-finite loss at epoch {epoch + 1} "
                    f"(lr={config.lr}, batch of {len(batch)})"
                )
            loss.backward()
            optimizer.step()
        if ranker and (epoch + 1) % config.eval_every == 0:
            metric = ranker.average_rank(model)
            improved = metric < best_metric
            logger.info(
                "epoch %d: val average rank %.4f%s",
                epoch + 1, metric, " *" if improved else "",
            )
            if improved:
                best_metric = metric
                best_params = {name: p.data.copy() for name, p in params.items()}
                since_best = 0
            else:
                since_best += 1
                if config.patience and since_best >= config.patience:
                    logger.info("early stop at epoch %d", epoch + 1)
                    break
    if not ranker:
        best_params = {name: p.data.copy() for name, p in params.items()}
        best_metric = float("nan")

    extra = {
        "epoch_next": config.epochs,
        "adam_step": optimizer.step_count,
        "best_metric": best_metric,
    }
    if out_path is not None:
        save_model(out_path, model, topic_model, optimizer, best_params, extra)
    for name, p in params.items():
        p.data = best_params[name]
    return model, extra


def save_model(path, model: SpectraPredictor, topic_model: TopicModel | None,
               optimizer: Adam | None, best_params: dict | None, extra: dict):
    header = {
        "kind": model.kind,
        "config": model.config.to_dict(),
        "atom_vocab": model.atom_vocab,
        "precursor_vocab": model.precursor_vocab,
        "seed": model.config.seed,
        "extra": extra,
    }
    tensors = {}
    for name, p in model.parameters().items():
        tensors[f"param.{name}"] = p.data
    if best_params is not None:
        for name, data in best_params.items():
            tensors[f"best.{name}"] = data
    if optimizer is not None:
        tensors.update(optimizer.state_tensors())
    if topic_model is not None:
        header["lda"] = {
            "alpha": topic_model.alpha,
            "beta": topic_model.beta,
            "seed": topic_model.seed,
        }
        tensors["lda.phi"] = topic_model.phi
    save_checkpoint(path, header, tensors)


def load_model(path, use: str = "best"):
    """Rebuild a predictor from a checkpoint.

    `use="best"` loads the selected parameters, `use="live"` the last
    training state. Returns (model, topic_model or None, header).
    """
    header, tensors = load_checkpoint(path)
    config = Config.from_dict(header["config"])
    model = SpectraPredictor(
        header["kind"], config, header["atom_vocab"], header["precursor_vocab"],
        np.random.default_rng(header["seed"]),
    )
    prefix = "best." if (use == "best" and any(k.startswith("best.") for k in tensors)) else "param."
    model.set_parameters(
        {name[len(prefix):]: t for name, t in tensors.items() if name.startswith(prefix)}
    )
    topic_model = None
    if "lda.phi" in tensors:
        lda_meta = header.get("lda", {})
        topic_model = TopicModel(
            phi=tensors["lda.phi"],
            alpha=lda_meta.get("alpha", 0.01),
            beta=lda_meta.get("beta", 0.01),
            seed=lda_meta.get("seed", 0),
        )
    return model, topic_model, header
