import logging
from pathlib import Path
from typing import Optional

import typer

from nmt_ablation.config import load_config
from nmt_ablation.data import build_vocab, encode_corpus, filter_pairs, read_parallel
from nmt_ablation.errors import handle_errors
from nmt_ablation.model import Checkpoint, build_model
from .train_funcs import train as run_training


log = logging.getLogger(__name__)
app = typer.Typer()


@app.command(help="Train a model and keep the checkpoint with the best validation perplexity")
@handle_errors
def train(
    config: Path = typer.Option(..., help="experiment config file (key=value)"),
    output_dir: Path = typer.Option(..., help="directory for best.ckpt, vocab.tsv and metrics.tsv"),
    init_checkpoint: Optional[Path] = typer.Option(
        None, help="start from this checkpoint (its architecture, vocabulary and frozen parameters)"
    ),
) -> None:
    """Train on `train_source`/`train_target`, validating on `dev_source`/`dev_target`.

    The corpora are expected to be BPE-segmented already. The joint
    vocabulary is built from both training sides unless an initial
    checkpoint provides one.
    """
    cfg = load_config(config)
    train_src, train_tgt, dev_src, dev_tgt = cfg.require("train_source", "train_target", "dev_source", "dev_target")
    train_text = filter_pairs(read_parallel(train_src, train_tgt), cfg.max_len, cfg.max_ratio)
    dev_text = read_parallel(dev_src, dev_tgt)

    if init_checkpoint is not None:
        start = Checkpoint.load(init_checkpoint)
        vocab = start.vocab
        model = start.build_model()
        if model.frozen:
            log.info("frozen parameters: %s", ", ".join(sorted(model.frozen)))
    else:
        corpus = [src for src, _ in train_text] + [tgt for _, tgt in train_text]
        vocab = build_vocab(corpus, min_count=cfg.min_count)
        model = build_model(cfg.model_config(len(vocab)), seed=cfg.seed)

    log.info("%s model, %d parameters, vocabulary of %d", model.config.family, model.num_parameters(), len(vocab))
    result = run_training(
        model,
        vocab,
        encode_corpus(vocab, train_text),
        encode_corpus(vocab, dev_text),
        cfg.train_config(),
        progress=True,
    )

    output_dir.mkdir(parents=True, exist_ok=True)
    result.best.save(output_dir / "best.ckpt")
    vocab.save(output_dir / "vocab.tsv")
    result.metrics.to_csv(output_dir / "metrics.tsv", sep="\t", index=False)
    typer.echo(
        f"best checkpoint {result.best.index} ({result.best.updates} updates): "
        f"val ppl {result.best.val_ppl:.4f} -> {output_dir / 'best.ckpt'}"
    )
