import logging
from pathlib import Path
from typing import Optional

import numpy as np
import typer
from rich.console import Console
from rich.table import Table

from nmt_ablation.errors import handle_errors
from .accounting import parameter_breakdown
from .base import Seq2SeqModel
from .config import VARIANTS, ModelConfig, apply_variant
from .rnn import RnnModel
from .transformer import TransformerModel


log = logging.getLogger(__name__)
app = typer.Typer()
console = Console()


def build_model(config: ModelConfig, seed: int = 0) -> Seq2SeqModel:
    """Allocate and initialise the model `config` describes.

    Parameters
    ----------
    config : ModelConfig, architecture
    seed : int, seed of the initialisation RNG

    Returns
    -------
    Seq2SeqModel, a TransformerModel or RnnModel
    """
    rng = np.random.default_rng(seed)
    if config.family == "transformer":
        model = TransformerModel(config, rng)
    else:
        model = RnnModel(config, rng)
    log.debug("built %s model with %d parameters", config.family, model.num_parameters())
    return model


def breakdown_table(config: ModelConfig, title: Optional[str] = None) -> Table:
    groups = parameter_breakdown(config)
    table = Table(title=title)
    table.add_column("group")
    table.add_column("parameters", justify="right")
    for name, count in groups.items():
        table.add_row(name, f"{count:,}")
    table.add_row("[bold]total[/bold]", f"[bold]{sum(groups.values()):,}[/bold]")
    return table


@app.command(help="Print the analytic parameter count of a model, per layer")
@handle_errors
def params(
    config: Optional[Path] = typer.Option(None, help="experiment config file (key=value)"),
    vocab_size: int = typer.Option(32000, help="joint vocabulary size, including reserved tokens"),
    encoder_layers: Optional[int] = typer.Option(None, help="override the number of encoder layers"),
    variant: Optional[str] = typer.Option(None, help=f"one of {', '.join(VARIANTS)}"),
) -> None:
    """Parameter accounting.

    Without `--config` the `paper` preset is used. Running it for 0 and 1
    encoder layers shows the per-encoder-layer cost.
    """
    from nmt_ablation.config import load_config, load_preset

    experiment = load_config(config) if config is not None else load_preset("paper")
    values = experiment.model_values()
    values["vocab_size"] = vocab_size
    if variant is not None:
        values = apply_variant(values, variant)
    if encoder_layers is not None:
        values["encoder_layers"] = encoder_layers
    model_config = ModelConfig.from_mapping(values)

    console.print(breakdown_table(model_config, title=f"{model_config.family}, {model_config.encoder_layers} encoder layers"))
    typer.echo(f"total parameters: {sum(parameter_breakdown(model_config).values())}")
