import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import typer
from rich.console import Console
from rich.table import Table

from nmt_ablation.config import optional_config, resolve_option
from nmt_ablation.data import read_lines
from nmt_ablation.errors import DataError, handle_errors
from nmt_ablation.inference import read_attention_dump
from nmt_ablation.model import Checkpoint
from nmt_ablation.subword import DEFAULT_MARKER, restore_words
from .alignment import corpus_aer, extract_alignment, read_gold_alignments, read_links, write_links
from .bleu import corpus_bleu
from .embeddings import frequent_token_neighbors, nearest_neighbors, source_embedding_matrix, transplant_embeddings
from .entropy import corpus_entropy


log = logging.getLogger(__name__)
app = typer.Typer()
console = Console()


def _layer_table(frame: pd.DataFrame, column: str, best: int, title: str) -> Table:
    table = Table(title=title)
    table.add_column("layer", justify="right")
    table.add_column(column, justify="right")
    for layer, value in zip(frame["layer"], frame[column]):
        style = "bold green" if layer == best else None
        table.add_row(str(layer), f"{value:.4f}", style=style)
    return table


@app.command("score-bleu", help="Corpus BLEU of a hypothesis file against a reference file")
@handle_errors
def score_bleu(
    hypotheses: Path,
    references: Path,
    tokenize: str = typer.Option("13a", help="sacrebleu tokenizer"),
) -> None:
    score = corpus_bleu(read_lines(hypotheses), read_lines(references), tokenize=tokenize)
    typer.echo(f"{score:.2f}")


@app.command(help="Alignment error rate of predicted links or of attention-derived alignments")
@handle_errors
def aer(
    gold: Optional[Path] = typer.Option(None, help="gold alignments, Pharaoh format (i-j sure, i?j possible) [default: config gold_alignment]"),
    links: Optional[Path] = typer.Option(None, help="predicted alignments, Pharaoh format"),
    attention: Optional[Path] = typer.Option(None, help="attention dump from force-align"),
    source: Optional[Path] = typer.Option(None, help="BPE-segmented source used for force-align [default: config test_source]"),
    target: Optional[Path] = typer.Option(None, help="BPE-segmented target used for force-align [default: config test_target]"),
    head_reduce: Optional[str] = typer.Option(None, help="combine heads by 'sum' or 'max' [default: config head_reduce, else sum]"),
    bidirectional: Optional[bool] = typer.Option(
        None, "--bidirectional/--unidirectional", help="link both directions, or only each target word to a source word [default: config, else bidirectional]"
    ),
    report: Optional[Path] = typer.Option(None, help="per-layer AER TSV"),
    write_best: Optional[Path] = typer.Option(None, help="write the best layer's links here"),
    marker: Optional[str] = typer.Option(None, help=f"BPE continuation marker [default: config marker, else {DEFAULT_MARKER}]"),
    config: Optional[Path] = typer.Option(None, help="experiment config providing gold_alignment/test_source/test_target and the analysis settings"),
) -> None:
    """With `--links`, print the corpus AER of those links. With `--attention`,
    extract alignments from every decoder layer and report each layer's AER,
    highlighting the best."""
    cfg = optional_config(config)
    golds = read_gold_alignments(resolve_option(gold, cfg, "gold_alignment"))
    if links is not None:
        typer.echo(f"{corpus_aer(read_links(links), golds):.4f}")
        return
    if attention is None:
        raise DataError("aer needs either --links or --attention with --source and --target")
    source = resolve_option(source, cfg, "test_source")
    target = resolve_option(target, cfg, "test_target")
    head_reduce = resolve_option(head_reduce, cfg, "head_reduce", "sum")
    bidirectional = resolve_option(bidirectional, cfg, "bidirectional", True)
    marker = resolve_option(marker, cfg, "marker", DEFAULT_MARKER)

    records = read_attention_dump(attention)
    src_lines, tgt_lines = read_lines(source), read_lines(target)
    if not len(records) == len(src_lines) == len(tgt_lines) == len(golds):
        raise DataError(
            f"{len(records)} attention records, {len(src_lines)} sources, "
            f"{len(tgt_lines)} targets and {len(golds)} gold alignments"
        )
    if not records:
        raise DataError("the attention dump holds no sentences")
    num_layers = records[0][1].num_layers
    if num_layers == 0:
        raise DataError("the attention dump holds no attention (model without attention?)")

    src_spans = [restore_words(line.split(), marker)[1] for line in src_lines]
    tgt_spans = [restore_words(line.split(), marker)[1] for line in tgt_lines]
    per_layer = []
    for layer in range(num_layers):
        preds = [
            extract_alignment(record, s, t, layer, bidirectional=bidirectional, head_reduce=head_reduce)
            for (_, record), s, t in zip(records, src_spans, tgt_spans)
        ]
        per_layer.append((layer, corpus_aer(preds, golds), preds))

    frame = pd.DataFrame([(layer, value) for layer, value, _ in per_layer], columns=["layer", "aer"])
    best = int(frame["aer"].idxmin())
    console.print(_layer_table(frame, "aer", best, "AER per decoder layer"))
    if report is not None:
        frame.to_csv(report, sep="\t", index=False)
    if write_best is not None:
        write_links(write_best, per_layer[best][2])
    typer.echo(f"best layer {best}: {frame['aer'][best]:.4f}")


@app.command(help="Mean attention entropy per decoder layer, in nats")
@handle_errors
def entropy(
    attention: Path = typer.Option(..., help="attention dump from force-align"),
    report: Optional[Path] = typer.Option(None, help="per-layer entropy TSV"),
) -> None:
    profile = corpus_entropy(record for _, record in read_attention_dump(attention))
    frame = profile.to_frame()
    console.print(_layer_table(frame, "entropy", int(np.argmin(profile.per_layer)), "attention entropy (nats)"))
    if report is not None:
        frame.to_csv(report, sep="\t", index=False)
    typer.echo(f"mean entropy: {profile.overall:.4f}")


@app.command(help="Nearest neighbours of tokens in a checkpoint's source embedding space")
@handle_errors
def neighbors(
    checkpoint: Path = typer.Option(..., help="trained checkpoint"),
    token: Optional[str] = typer.Option(None, help="query token; default probes the most frequent tokens"),
    k: Optional[int] = typer.Option(None, "--k", "-k", help="neighbours per token [default: config neighbors_k, else 5]"),
    top: Optional[int] = typer.Option(None, help="number of frequent tokens to probe [default: config neighbors_top, else 150]"),
    skip_reserved: bool = typer.Option(True, help="leave <pad>, <s>, </s> and <unk> out of the neighbour lists"),
    output: Optional[Path] = typer.Option(None, help="TSV of token, rank, neighbor, similarity"),
    config: Optional[Path] = typer.Option(None, help="experiment config providing neighbors_k/neighbors_top"),
) -> None:
    cfg = optional_config(config)
    k = resolve_option(k, cfg, "neighbors_k", 5)
    top = resolve_option(top, cfg, "neighbors_top", 150)
    ckpt = Checkpoint.load(checkpoint)
    matrix = source_embedding_matrix(ckpt)
    if token is not None:
        found = nearest_neighbors(matrix, ckpt.vocab, token, k, skip_reserved)
        frame = pd.DataFrame(
            [(token, rank, n, s) for rank, (n, s) in enumerate(found, start=1)],
            columns=["token", "rank", "neighbor", "similarity"],
        )
    else:
        frame = frequent_token_neighbors(ckpt.vocab, matrix, top=top, k=k, skip_reserved=skip_reserved)

    if output is not None:
        frame.to_csv(output, sep="\t", index=False)
    for query, group in frame.groupby("token", sort=False):
        typer.echo(f"{query}\t" + " ".join(f"{n}({s:.3f})" for n, s in zip(group["neighbor"], group["similarity"])))


@app.command(help="Initialise a checkpoint's embeddings from another checkpoint")
@handle_errors
def transplant(
    target: Path = typer.Option(..., help="checkpoint receiving the embeddings"),
    source: Path = typer.Option(..., help="checkpoint providing the embeddings"),
    output: Path = typer.Option(..., help="checkpoint to write"),
    fixed: bool = typer.Option(False, help="freeze the transplanted embeddings during later training"),
) -> None:
    """Use the result with `train --init-checkpoint`."""
    result = transplant_embeddings(Checkpoint.load(target), Checkpoint.load(source), fixed=fixed)
    result.save(output)
    typer.echo(f"wrote {output} ({'fixed' if fixed else 'trainable'} embeddings)")
