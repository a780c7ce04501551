"""Post-norm Transformer with an encoder of any depth, including none."""
from typing import Optional

import numpy as np

from nmt_ablation.data import PAD
from nmt_ablation.tensor import Tensor, dropout
from .base import Seq2SeqModel, SourceState
from .config import ModelConfig
from .layers import Embeddings, FeedForward, LayerNorm, MultiHeadAttention, sinusoid_positions
from .record import EMBEDDINGS_ONLY, EMBEDDINGS_PLUS_POSITIONS, ENCODER_OUTPUT, AttentionRecorder


def causal_mask(length: int) -> np.ndarray:
    """[1, 1, T, T] mask letting step t see steps <= t."""
    return np.tril(np.ones((length, length), dtype=bool))[None, None]


class EncoderLayer:
    def __init__(self, store, name: str, config: ModelConfig):
        self.rate = config.block_dropout
        self.self_attention = MultiHeadAttention(store, f"{name}.self_attention", config.d_model, config.heads)
        self.attention_norm = LayerNorm(store, f"{name}.attention_norm", config.d_model)
        self.feed_forward = FeedForward(store, f"{name}.feed_forward", config.d_model, config.ff_dim)
        self.feed_forward_norm = LayerNorm(store, f"{name}.feed_forward_norm", config.d_model)

    def __call__(self, x: Tensor, mask: np.ndarray, training: bool, rng) -> Tensor:
        h = self.self_attention(x, x, x, mask=mask)
        x = self.attention_norm(x + dropout(h, self.rate, training, rng))
        h = self.feed_forward(x)
        return self.feed_forward_norm(x + dropout(h, self.rate, training, rng))


class DecoderLayer:
    def __init__(self, store, name: str, config: ModelConfig):
        self.rate = config.block_dropout
        d = config.d_model
        self.self_attention = MultiHeadAttention(store, f"{name}.self_attention", d, config.heads)
        self.self_attention_norm = LayerNorm(store, f"{name}.self_attention_norm", d)
        self.source_attention = MultiHeadAttention(store, f"{name}.source_attention", d, config.heads)
        self.source_attention_norm = LayerNorm(store, f"{name}.source_attention_norm", d)
        self.feed_forward = FeedForward(store, f"{name}.feed_forward", d, config.ff_dim)
        self.feed_forward_norm = LayerNorm(store, f"{name}.feed_forward_norm", d)

    def __call__(
        self,
        y: Tensor,
        state: SourceState,
        self_mask: np.ndarray,
        training: bool,
        rng,
        recorder: Optional[AttentionRecorder] = None,
    ) -> Tensor:
        h = self.self_attention(y, y, y, mask=self_mask)
        y = self.self_attention_norm(y + dropout(h, self.rate, training, rng))
        source_mask = state.mask[:, None, None, :]
        h = self.source_attention(y, state.memory, state.memory, mask=source_mask, recorder=recorder)
        y = self.source_attention_norm(y + dropout(h, self.rate, training, rng))
        h = self.feed_forward(y)
        return self.feed_forward_norm(y + dropout(h, self.rate, training, rng))


class TransformerModel(Seq2SeqModel):
    """Transformer translation model.

    With `encoder_layers=0` no encoder block is allocated and the decoder
    attends to scaled source embeddings, plus sinusoid positions unless
    `use_source_positions` is false.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config, rng)
        self.embed = Embeddings(self.store, config.vocab_size, config.d_model, config.tie_embeddings)
        self.encoder = [EncoderLayer(self.store, f"encoder.{i}", config) for i in range(config.encoder_layers)]
        self.decoder = [DecoderLayer(self.store, f"decoder.{i}", config) for i in range(config.decoder_layers)]

    def source_provenance(self) -> str:
        if self.encoder:
            return ENCODER_OUTPUT
        return EMBEDDINGS_PLUS_POSITIONS if self.config.use_source_positions else EMBEDDINGS_ONLY

    def encode(self, src_ids: np.ndarray, training: bool = False, rng=None) -> SourceState:
        src_ids = np.asarray(src_ids, dtype=np.int64)
        mask = src_ids != PAD
        x = self.embed.source_tokens(src_ids)
        if self.encoder or self.config.use_source_positions:
            x = x + sinusoid_positions(src_ids.shape[1], self.config.d_model)
        x = dropout(x, self.config.embed_dropout, training, rng)
        attention_mask = mask[:, None, None, :]
        for layer in self.encoder:
            x = layer(x, attention_mask, training, rng)
        return SourceState(memory=x, mask=mask)

    def decode(
        self,
        state: SourceState,
        tgt_in: np.ndarray,
        training: bool = False,
        rng=None,
        recorder: Optional[AttentionRecorder] = None,
    ) -> Tensor:
        tgt_in = np.asarray(tgt_in, dtype=np.int64)
        steps = tgt_in.shape[1]
        y = self.embed.target_tokens(tgt_in) + sinusoid_positions(steps, self.config.d_model)
        y = dropout(y, self.config.embed_dropout, training, rng)
        self_mask = causal_mask(steps)
        for layer in self.decoder:
            y = layer(y, state, self_mask, training, rng, recorder=recorder)
        return self.embed.logits(y)
