"""Optimisation protocol: Adam, periodic checkpoints, plateau decay and early stopping."""
import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Extra, validator
from rich.progress import track

from nmt_ablation.data import Batch, ParallelPair, Vocabulary, make_batches
from nmt_ablation.errors import DataError, TrainingDivergedError
from nmt_ablation.model import Checkpoint, Seq2SeqModel
from nmt_ablation.tensor import (
    AdamState,
    Tensor,
    adam_update,
    backward,
    clip_grad_norm,
    log_softmax,
    no_grad,
    pick,
    zero_grad,
)


log = logging.getLogger(__name__)

METRIC_COLUMNS = ["checkpoint_index", "updates", "train_loss", "val_ppl", "lr"]


class TrainConfig(BaseModel):
    lr: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    token_budget: int = 2048
    checkpoint_interval: int = 1000
    plateau_patience: int = 8
    lr_decay: float = 0.7
    early_stop_patience: int = 32
    max_updates: int = 1_000_000
    label_smoothing: float = 0.0
    grad_clip_rnn: float = 1.0
    seed: int = 1

    class Config:
        extra = Extra.forbid

    @validator("lr", "adam_epsilon", "lr_decay")
    def positive(cls, v):
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator("token_budget", "checkpoint_interval", "plateau_patience", "early_stop_patience")
    def at_least_one(cls, v):
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @validator("max_updates")
    def non_negative(cls, v):
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @validator("label_smoothing")
    def smoothing_range(cls, v):
        if not 0.0 <= v < 1.0:
            raise ValueError("must be in [0, 1)")
        return v


@dataclass(frozen=True)
class TrainState:
    """Schedule bookkeeping, advanced once per checkpoint."""

    lr: float
    seed: int = 0
    update_count: int = 0
    checkpoint_index: int = 0
    best_val_ppl: float = math.inf
    checkpoints_since_best: int = 0
    plateau: int = 0

    @property
    def improved(self) -> bool:
        """Whether the last checkpoint set a new best."""
        return self.checkpoints_since_best == 0 and math.isfinite(self.best_val_ppl)


def lr_schedule_step(
    state: TrainState,
    new_val_ppl: float,
    plateau_patience: int = 8,
    lr_decay: float = 0.7,
) -> TrainState:
    """Account for one checkpoint's validation perplexity.

    A strict improvement resets both counters. Otherwise both grow, and every
    `plateau_patience` consecutive non-improving checkpoints multiply the
    learning rate by `lr_decay`.
    """
    if new_val_ppl < state.best_val_ppl:
        return dataclasses.replace(state, best_val_ppl=new_val_ppl, checkpoints_since_best=0, plateau=0)

    lr, plateau = state.lr, state.plateau + 1
    if plateau >= plateau_patience:
        lr, plateau = lr * lr_decay, 0
        log.info("no improvement for %d checkpoints, lr -> %.3g", plateau_patience, lr)
    return dataclasses.replace(
        state, lr=lr, plateau=plateau, checkpoints_since_best=state.checkpoints_since_best + 1
    )


def should_stop(state: TrainState, early_stop_patience: int = 32) -> bool:
    return state.checkpoints_since_best >= early_stop_patience


def sequence_nll(
    model: Seq2SeqModel,
    batch: Batch,
    training: bool = False,
    rng=None,
    label_smoothing: float = 0.0,
) -> Tensor:
    """Summed token negative log-likelihood of a batch (EOS counted, PAD excluded)."""
    logits = model.forward(batch.source, batch.target_input, training=training, rng=rng)
    logp = log_softmax(logits)
    mask = batch.target_mask.astype(np.float64)
    nll = -pick(logp, batch.target_output)
    if label_smoothing:
        nll = nll * (1.0 - label_smoothing) - logp.mean(axis=-1) * label_smoothing
    return (nll * mask).sum()


def perplexity(model: Seq2SeqModel, pairs: Sequence[ParallelPair], token_budget: int = 2048) -> float:
    """exp(total token NLL / total target tokens) over an encoded corpus.

    Raises
    ------
    DataError
        If `pairs` is empty.
    """
    if not pairs:
        raise DataError("cannot compute perplexity of an empty corpus")
    total, tokens = 0.0, 0
    with no_grad():
        for batch in make_batches(pairs, token_budget):
            total += sequence_nll(model, batch).item()
            tokens += batch.token_count
    return math.exp(total / tokens)


@dataclass
class TrainResult:
    best: Checkpoint
    state: TrainState
    metrics: pd.DataFrame
    stopped_early: bool = False


def _batch_stream(pairs, token_budget: int, rng: np.random.Generator):
    while True:
        for batch in make_batches(pairs, token_budget, shuffle_seed=int(rng.integers(2**31))):
            yield batch


def train(
    model: Seq2SeqModel,
    vocab: Vocabulary,
    train_pairs: Sequence[ParallelPair],
    dev_pairs: Sequence[ParallelPair],
    config: Optional[TrainConfig] = None,
    progress: bool = False,
) -> TrainResult:
    """Train `model` in place and return its best checkpoint by validation perplexity.

    The untrained model is evaluated as checkpoint 0. After that a checkpoint
    is evaluated every `checkpoint_interval` updates and once more when the
    update budget runs out between two checkpoints. Training stops after
    `early_stop_patience` consecutive checkpoints without improvement or after
    `max_updates` updates.

    Parameters
    ----------
    model : Seq2SeqModel, modified in place
    vocab : Vocabulary, stored in the checkpoints
    train_pairs : encoded training pairs
    dev_pairs : encoded validation pairs
    config : TrainConfig, optional
    progress : bool, show a progress bar

    Returns
    -------
    TrainResult

    Raises
    ------
    TrainingDivergedError
        If the training loss becomes NaN or infinite.
    """
    config = config or TrainConfig()
    if not train_pairs:
        raise DataError("training corpus is empty")

    data_seq, dropout_seq = np.random.SeedSequence(config.seed).spawn(2)
    batches = _batch_stream(train_pairs, config.token_budget, np.random.default_rng(data_seq))
    dropout_rng = np.random.default_rng(dropout_seq)
    adam = AdamState(lr=config.lr, beta1=config.adam_beta1, beta2=config.adam_beta2, epsilon=config.adam_epsilon)
    clip = config.grad_clip_rnn if model.config.family == "rnn" else 0.0

    state = TrainState(lr=config.lr, seed=config.seed)
    rows = []
    window_loss, window_tokens = 0.0, 0
    best = None

    def evaluate(state: TrainState) -> TrainState:
        nonlocal best, window_loss, window_tokens
        val_ppl = perplexity(model, dev_pairs, config.token_budget)
        state = lr_schedule_step(state, val_ppl, config.plateau_patience, config.lr_decay)
        train_loss = window_loss / window_tokens if window_tokens else float("nan")
        rows.append((state.checkpoint_index, state.update_count, train_loss, val_ppl, state.lr))
        log.info(
            "checkpoint %d (%d updates): train loss %.4f, val ppl %.4f, lr %.3g",
            state.checkpoint_index, state.update_count, train_loss, val_ppl, state.lr,
        )
        if state.improved or best is None:
            best = Checkpoint.from_model(
                model, vocab, index=state.checkpoint_index, updates=state.update_count, val_ppl=val_ppl, seed=config.seed
            )
        window_loss, window_tokens = 0.0, 0
        return state

    state = evaluate(state)
    stopped = False
    for update in track(range(1, config.max_updates + 1), description="Training...", disable=not progress):
        batch = next(batches)
        zero_grad(model.params)
        loss = sequence_nll(model, batch, training=True, rng=dropout_rng, label_smoothing=config.label_smoothing)
        value = loss.item()
        if not np.isfinite(value):
            raise TrainingDivergedError(f"training loss became {value} at update {update}")
        backward(loss * (1.0 / batch.token_count))
        if clip:
            clip_grad_norm(model.params, clip)
        adam.lr = state.lr
        adam_update(model.params, adam)

        window_loss += value
        window_tokens += batch.token_count
        state = dataclasses.replace(state, update_count=update)
        if update % config.checkpoint_interval == 0:
            state = evaluate(dataclasses.replace(state, checkpoint_index=state.checkpoint_index + 1))
            if should_stop(state, config.early_stop_patience):
                log.info("early stop after %d checkpoints without improvement", state.checkpoints_since_best)
                stopped = True
                break

    if not stopped and state.update_count % config.checkpoint_interval:
        state = evaluate(dataclasses.replace(state, checkpoint_index=state.checkpoint_index + 1))

    metrics = pd.DataFrame(rows, columns=METRIC_COLUMNS)
    return TrainResult(best=best, state=state, metrics=metrics, stopped_early=stopped)
