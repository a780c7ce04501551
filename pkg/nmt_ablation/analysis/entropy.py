"""Concentration of decoder-to-source attention, in nats."""
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import pandas as pd
import xarray as xr
from scipy.special import entr

from nmt_ablation.errors import DataError
from nmt_ablation.model import AttentionRecord


ROW_SUM_TOL = 1e-4


@dataclass
class EntropyProfile:
    """Mean attention entropy of every decoder layer, and their mean."""

    per_layer: np.ndarray
    overall: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"layer": np.arange(len(self.per_layer)), "entropy": self.per_layer})


def _step_entropy(record: AttentionRecord) -> xr.DataArray:
    """Entropy of the head-averaged distribution at every (layer, target step)."""
    if record.is_empty:
        raise DataError("the record holds no attention (model without attention?)")
    error = record.row_sum_error()
    if error > ROW_SUM_TOL:
        raise DataError(f"attention rows must sum to 1, found a deviation of {error:.2e}")
    averaged = record.to_xarray().mean("head")
    return xr.apply_ufunc(entr, averaged).sum("src")


def attention_entropy(record: AttentionRecord) -> EntropyProfile:
    """Average over target steps of -sum_i a_i ln a_i, per layer, heads averaged first.

    0 ln 0 is taken as 0.

    Raises
    ------
    DataError
        If the record is empty or a row deviates from summing to 1 by more than 1e-4.
    """
    per_layer = _step_entropy(record).mean("tgt").values
    return EntropyProfile(per_layer=per_layer, overall=float(per_layer.mean()))


def corpus_entropy(records: Iterable[AttentionRecord]) -> EntropyProfile:
    """Entropy averaged over all target steps of all sentences, per layer."""
    totals, steps = None, 0
    for record in records:
        step_entropy = _step_entropy(record)
        summed = step_entropy.sum("tgt").values
        if totals is None:
            totals = summed
        elif summed.shape != totals.shape:
            raise DataError(f"records disagree on the number of layers ({summed.size} vs {totals.size})")
        else:
            totals = totals + summed
        steps += record.tgt_len
    if totals is None or steps == 0:
        raise DataError("no attention records to average")
    per_layer = totals / steps
    return EntropyProfile(per_layer=per_layer, overall=float(per_layer.mean()))
