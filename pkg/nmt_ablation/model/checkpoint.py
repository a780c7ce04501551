"""Model checkpoints: architecture, vocabulary, weights and training metadata in one file."""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from nmt_ablation.data import Vocabulary
from nmt_ablation.errors import ConfigError, DataError
from nmt_ablation.tensor import read_archive, write_archive
from .base import Seq2SeqModel
from .config import ModelConfig


@dataclass
class Checkpoint:
    config: ModelConfig
    vocab: Vocabulary
    params: dict
    frozen: frozenset = frozenset()
    index: int = 0
    updates: int = 0
    val_ppl: float = math.inf
    seed: int = 0
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_model(cls, model: Seq2SeqModel, vocab: Vocabulary, **meta) -> "Checkpoint":
        if len(vocab) != model.config.vocab_size:
            raise ConfigError(f"vocabulary has {len(vocab)} entries, model expects {model.config.vocab_size}")
        return cls(config=model.config, vocab=vocab, params=model.state_dict(), frozen=model.frozen, **meta)

    def build_model(self) -> Seq2SeqModel:
        """A model carrying this checkpoint's weights, with its frozen parameters frozen."""
        from .model import build_model

        model = build_model(self.config, seed=self.seed)
        model.load_state_dict(self.params)
        model.freeze(self.frozen)
        return model

    def _meta_lines(self) -> list:
        lines = [
            f"index={self.index}",
            f"updates={self.updates}",
            f"val_ppl={self.val_ppl!r}",
            f"seed={self.seed}",
            f"frozen={','.join(sorted(self.frozen))}",
        ]
        lines.extend(f"{k}={v}" for k, v in self.extra.items())
        return lines

    def save(self, path):
        write_archive(
            path,
            {"config": self.config.to_lines(), "vocab": self.vocab.to_lines(), "meta": self._meta_lines()},
            self.params,
        )

    @classmethod
    def load(cls, path, expect_config: Optional[ModelConfig] = None) -> "Checkpoint":
        sections, arrays = read_archive(path)
        for name in ("config", "vocab", "meta"):
            if name not in sections:
                raise DataError(f"{path}: checkpoint has no [{name}] section")
        config = ModelConfig.from_lines(sections["config"])
        if expect_config is not None and expect_config != config:
            raise ConfigError(f"{path}: checkpoint architecture differs from the configured model")
        meta = dict(line.split("=", 1) for line in sections["meta"] if "=" in line)
        frozen = frozenset(n for n in meta.pop("frozen", "").split(",") if n)
        try:
            index = int(meta.pop("index"))
            updates = int(meta.pop("updates"))
            val_ppl = float(meta.pop("val_ppl"))
            seed = int(meta.pop("seed", 0))
        except (KeyError, ValueError) as e:
            raise DataError(f"{path}: malformed checkpoint metadata ({e})") from None
        return cls(
            config=config,
            vocab=Vocabulary.from_lines(sections["vocab"]),
            params={k: np.array(v) for k, v in arrays.items()},
            frozen=frozen,
            index=index,
            updates=updates,
            val_ppl=val_ppl,
            seed=seed,
            extra=meta,
        )
