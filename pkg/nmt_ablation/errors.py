"""Exception hierarchy shared by every sub-package.

Commands translate an `NmtError` into exit status 1; click handles usage
errors (exit status 2) on its own.
"""
import functools
import logging

import typer
from rich.console import Console


log = logging.getLogger(__name__)
err_console = Console(stderr=True)


class NmtError(Exception):
    """Base class for all errors raised by nmt-ablation."""

    exit_code = 1


class DataError(NmtError):
    """Input data is empty, malformed or inconsistent."""


class ConfigError(NmtError):
    """A configuration value or combination of values is invalid."""


class ContractError(NmtError):
    """A function was called outside of its documented contract."""


class DimensionError(ContractError):
    """Tensor shapes are incompatible."""


class ParameterError(ContractError):
    """A numeric parameter is outside of its legal range."""


class VocabLookupError(NmtError, KeyError):
    """A token is not part of the vocabulary."""

    def __str__(self):
        return Exception.__str__(self)


class TrainingDivergedError(NmtError):
    """The training loss became non-finite."""


def handle_errors(func):
    """Wrap a typer command so that package errors exit with status 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (NmtError, FileNotFoundError) as e:
            log.debug("command failed", exc_info=True)
            err_console.print(f"[bold red]error[/bold red] ({type(e).__name__}): {e}")
            raise typer.Exit(code=1)

    return wrapper
