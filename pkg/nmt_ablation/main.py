import logging

import typer
from rich.logging import RichHandler

from nmt_ablation import analysis
from nmt_ablation import inference
from nmt_ablation import model
from nmt_ablation import subword
from nmt_ablation import training
from nmt_ablation.config import get_settings

app = typer.Typer()
for sub_app in (subword.app, training.app, inference.app, analysis.app, model.app):
    app.registered_commands.extend(sub_app.registered_commands)


@app.callback()
def callback(verbose: bool = typer.Option(False, "--verbose", "-v", help="log at DEBUG level")):
    """Encoder-free NMT ablation toolkit"""
    level = "DEBUG" if verbose else get_settings().log_level.upper()
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True)],
        force=True,
    )
