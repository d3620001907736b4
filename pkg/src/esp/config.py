"""Flat `key = value` run configuration.

Every tunable hyperparameter is one key so grid searches can enumerate the
file. Unknown keys are an input error, not a warning.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    # spectra
    n_bins: int = 1000
    max_spectra: int = 5
    quantization: int = 100
    sqrt_intensity: bool = False
    collision_norm: float = 100.0
    # fingerprints
    fp_radius: int = 2
    fp_bits: int = 2048
    # encoders
    latent_dim: int = 512
    mlp_fp_hidden: int = 512
    mlp_is_hidden: int = 64
    gnn_layers: int = 3
    atom_extra_features: bool = True
    # prediction head and peak attention
    pred_hidden: int = 512
    attention_heads: int = 4
    attention_rank: int = 64
    attention_blend: float = 0.5
    aux_hidden: int = 256
    aux_weight: float = 0.1
    # topic model
    topics: int = 100
    lda_alpha: float = 0.0  # 0 means 1/topics
    lda_beta: float = 0.0
    lda_iters: int = 200
    # optimization
    lr: float = 1e-3
    dropout: float = 0.0
    weight_decay: float = 0.0
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    eval_every: int = 5
    patience: int = 0  # 0 disables early stopping; selection still applies
    # ensemble
    ens_hidden: int = 512
    ens_lr: float = 1e-3
    ens_epochs: int = 200
    ens_batch_size: int = 64
    ens_patience: int = 20
    label_source: str = "rank"
    weighting: str = "smape"
    hard_blend: bool = False

    def alpha(self) -> float:
        return self.lda_alpha if self.lda_alpha > 0 else 1.0 / self.topics

    def beta(self) -> float:
        return self.lda_beta if self.lda_beta > 0 else 1.0 / self.topics

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, values: dict) -> "Config":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(value, known[key].type, key)
        return cls(**kwargs)


def _coerce(value, type_name, key):
    text = str(value).strip()
    if type_name in ("bool", bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key {key!r}: cannot read {text!r} as bool")
    try:
        if type_name in ("int", int):
            return int(text)
        if type_name in ("float", float):
            return float(text)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot read {text!r}")
    return text


def load_config(path: str | Path) -> Config:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return Config.from_dict(values)
