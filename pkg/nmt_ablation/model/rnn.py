"""LSTM sequence-to-sequence model with a removable encoder and attention."""
from typing import Optional

import numpy as np

from nmt_ablation.data import PAD
from nmt_ablation.tensor import Tensor, concat, dropout, softmax, stack, tanh
from .base import Seq2SeqModel, SourceState
from .config import ModelConfig
from .layers import Embeddings, Linear, LSTMStack, sinusoid_positions
from .record import EMBEDDINGS_ONLY, EMBEDDINGS_PLUS_POSITIONS, ENCODER_OUTPUT, AttentionRecorder


class RnnModel(Seq2SeqModel):
    """Unidirectional LSTM encoder-decoder without input feeding.

    The decoder output h_t is combined with a source context c_t as
    tanh(W_c [c_t; h_t] + b_c) before the output projection. With attention,
    c_t comes from bilinear ("general") attention over the source memory;
    without it, c_t is a fixed summary of the source which is also
    concatenated to every decoder input.

    Without an encoder the memory is the scaled source embeddings plus
    sinusoid positions, and the summary is their masked mean. With an
    encoder the memory is the top LSTM layer's outputs and the summary is its
    final hidden state.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config, rng)
        d = config.d_model
        self.embed = Embeddings(self.store, config.vocab_size, d, config.tie_embeddings)
        self.encoder = None
        if config.encoder_layers:
            self.encoder = LSTMStack(self.store, "encoder", d, d, config.encoder_layers, config.rnn_dropout)
        decoder_input = d if config.use_attention else 2 * d
        self.decoder = LSTMStack(self.store, "decoder", decoder_input, d, config.decoder_layers, config.rnn_dropout)
        if config.use_attention:
            self.attention = self.store.glorot("attention.weight", (d, d))
        self.combine = Linear(self.store, "combine", 2 * d, d)

    def source_provenance(self) -> str:
        if self.encoder is not None:
            return ENCODER_OUTPUT
        return EMBEDDINGS_PLUS_POSITIONS if self.config.use_source_positions else EMBEDDINGS_ONLY

    def encode(self, src_ids: np.ndarray, training: bool = False, rng=None) -> SourceState:
        src_ids = np.asarray(src_ids, dtype=np.int64)
        mask = src_ids != PAD
        x = self.embed.source_tokens(src_ids)
        if self.encoder is not None:
            x = dropout(x, self.config.rnn_dropout, training, rng)
            memory, final = self.encoder(x, mask, training, rng)
            return SourceState(memory=memory, mask=mask, summary=final)

        if self.config.use_source_positions:
            x = x + sinusoid_positions(src_ids.shape[1], self.config.d_model)
        memory = dropout(x, self.config.embed_dropout, training, rng)
        weights = mask / mask.sum(axis=1, keepdims=True)
        summary = (memory * weights[:, :, None]).sum(axis=1)
        return SourceState(memory=memory, mask=mask, summary=summary)

    def decode(
        self,
        state: SourceState,
        tgt_in: np.ndarray,
        training: bool = False,
        rng=None,
        recorder: Optional[AttentionRecorder] = None,
    ) -> Tensor:
        tgt_in = np.asarray(tgt_in, dtype=np.int64)
        b, steps = tgt_in.shape
        y = self.embed.target_tokens(tgt_in)
        y = dropout(y, self.config.rnn_dropout, training, rng)
        if not self.config.use_attention:
            summary = stack([state.summary] * steps, axis=1)
            y = concat([y, summary], axis=-1)
        hidden, _ = self.decoder(y, np.ones((b, steps), dtype=bool), training, rng)

        if self.config.use_attention:
            scores = (hidden @ self.attention) @ state.memory.transpose(0, 2, 1)
            weights = softmax(scores, axis=-1, mask=state.mask[:, None, :])
            if recorder is not None:
                recorder.add(weights.data[:, None])
            context = weights @ state.memory
        else:
            context = summary
        combined = tanh(self.combine(concat([context, hidden], axis=-1)))
        combined = dropout(combined, self.config.rnn_dropout, training, rng)
        return self.embed.logits(combined)
