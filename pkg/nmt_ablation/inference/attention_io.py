"""Plain-text attention dumps.

One block per sentence pair::

    sent <id> layers=<L> heads=<H> tgt=<T> src=<S>
    <L*H*T lines of S space-separated numbers, layer-major then head then target step>
"""
import re
from typing import Iterable, Tuple

import numpy as np

from nmt_ablation.errors import DataError
from nmt_ablation.model import AttentionRecord


HEADER = re.compile(r"^sent (\S+) layers=(\d+) heads=(\d+) tgt=(\d+) src=(\d+)$")


def write_attention_dump(path, records: Iterable[Tuple[str, AttentionRecord]]):
    with open(path, "w", encoding="utf-8") as fp:
        for sent_id, record in records:
            layers, heads, tgt, src = record.shape
            fp.write(f"sent {sent_id} layers={layers} heads={heads} tgt={tgt} src={src}\n")
            if record.weights.size:
                np.savetxt(fp, record.weights.reshape(-1, src), fmt="%.17g")


def read_attention_dump(path) -> list:
    """Read every (sentence id, AttentionRecord) block of a dump, in file order.

    Raises
    ------
    DataError
        On a malformed header or a block with the wrong number of rows or columns.
    """
    with open(path, encoding="utf-8") as fp:
        lines = [line.rstrip("\n") for line in fp]

    records = []
    pos = 0
    while pos < len(lines):
        if not lines[pos].strip():
            pos += 1
            continue
        match = HEADER.match(lines[pos])
        if match is None:
            raise DataError(f"{path}:{pos + 1}: expected an attention header, got {lines[pos]!r}")
        sent_id = match.group(1)
        layers, heads, tgt, src = (int(g) for g in match.groups()[1:])
        rows = layers * heads * tgt
        block = lines[pos + 1 : pos + 1 + rows]
        if len(block) < rows:
            raise DataError(f"{path}: sentence {sent_id} is truncated")
        if rows:
            values = np.loadtxt(block, dtype=np.float64, ndmin=2)
            if values.shape != (rows, src):
                raise DataError(f"{path}: sentence {sent_id} has rows of {values.shape[1]} values, expected {src}")
            weights = values.reshape(layers, heads, tgt, src)
        else:
            weights = np.zeros((layers, heads, tgt, src))
        records.append((sent_id, AttentionRecord(weights)))
        pos += 1 + rows
    return records
