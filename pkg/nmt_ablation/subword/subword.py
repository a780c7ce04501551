from pathlib import Path
from typing import List, Optional

import typer
from rich.progress import track

from nmt_ablation.config import optional_config, resolve_option
from nmt_ablation.data import read_lines
from nmt_ablation.errors import handle_errors
from .bpe_funcs import (
    DEFAULT_MARKER,
    TOY_NUM_MERGES,
    apply_bpe,
    learn_bpe,
    load_merges,
    save_merges,
)


app = typer.Typer()


@app.command("learn-bpe", help="Learn a BPE merge list from one or more corpora")
@handle_errors
def learn_bpe_command(
    corpora: List[Path],
    output: Path = typer.Option(..., help="merge file to write"),
    merges: Optional[int] = typer.Option(None, help=f"number of merge operations [default: config bpe_merges, else {TOY_NUM_MERGES}]"),
    marker: Optional[str] = typer.Option(None, help=f"continuation marker [default: config marker, else {DEFAULT_MARKER}]"),
    config: Optional[Path] = typer.Option(None, help="experiment config providing bpe_merges/marker"),
) -> None:
    """Learn BPE merges.

    Passing both sides of a parallel corpus learns a joint model; passing a
    single side learns a separate model for that language.
    """
    cfg = optional_config(config)
    num_merges = resolve_option(merges, cfg, "bpe_merges", TOY_NUM_MERGES)
    sentences = []
    for path in corpora:
        sentences.extend(read_lines(path))
    model = learn_bpe(sentences, num_merges, marker=resolve_option(marker, cfg, "marker", DEFAULT_MARKER))
    save_merges(model, output)
    typer.echo(f"learned {model.num_merges} merges -> {output}")


@app.command("apply-bpe", help="Segment a text file with a learned BPE model")
@handle_errors
def apply_bpe_command(
    merges: Path,
    input: Path,
    output: Path,
    marker: Optional[str] = typer.Option(None, help=f"continuation marker [default: config marker, else {DEFAULT_MARKER}]"),
    config: Optional[Path] = typer.Option(None, help="experiment config providing marker"),
) -> None:
    model = load_merges(merges, marker=resolve_option(marker, optional_config(config), "marker", DEFAULT_MARKER))
    lines = read_lines(input)
    with open(output, "w", encoding="utf-8") as fp:
        for line in track(lines, description="Segmenting..."):
            fp.write(" ".join(apply_bpe(model, line)) + "\n")
