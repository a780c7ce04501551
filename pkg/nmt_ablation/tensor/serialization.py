"""Portable archive of named float64 arrays plus text sections.

Layout (see docs/checkpoint-format.md)::

    nmt-ablation checkpoint v1
    [section <name>]
    <text lines>
    ...
    [section manifest]
    <name>\t<d1,d2,...>\t<offset>
    [payload]
    <little-endian float64 payload>

Offsets count float64 elements from the first payload byte.
"""
from pathlib import Path
from typing import Mapping

import numpy as np

from nmt_ablation.errors import DataError


MAGIC = "nmt-ablation checkpoint v1"
PAYLOAD_MARK = b"\n[payload]\n"
_DTYPE = np.dtype("<f8")


def write_archive(path, sections: Mapping[str, list], arrays: Mapping[str, np.ndarray]):
    """Write text `sections` and `arrays` to a single archive file."""
    lines = [MAGIC]
    for title, body in sections.items():
        if title in ("manifest", "payload"):
            raise DataError(f"section name {title!r} is reserved")
        lines.append(f"[section {title}]")
        lines.extend(body)

    lines.append("[section manifest]")
    offset = 0
    chunks = []
    for name, array in arrays.items():
        array = np.ascontiguousarray(array, dtype=_DTYPE)
        shape = ",".join(str(d) for d in array.shape)
        lines.append(f"{name}\t{shape}\t{offset}")
        offset += array.size
        chunks.append(array.tobytes())

    with open(path, "wb") as fp:
        fp.write("\n".join(lines).encode("utf-8"))
        fp.write(PAYLOAD_MARK)
        for chunk in chunks:
            fp.write(chunk)


def read_archive(path) -> tuple:
    """Read an archive written by `write_archive`.

    Returns
    -------
    tuple[dict[str, list[str]], dict[str, np.ndarray]]
        text sections (without the manifest) and arrays in manifest order
    """
    raw = Path(path).read_bytes()
    cut = raw.find(PAYLOAD_MARK)
    if cut < 0:
        raise DataError(f"{path}: missing payload section")
    header = raw[:cut].decode("utf-8").split("\n")
    if header[0] != MAGIC:
        raise DataError(f"{path}: not an nmt-ablation checkpoint")
    body = raw[cut + len(PAYLOAD_MARK):]
    if len(body) % _DTYPE.itemsize:
        raise DataError(f"{path}: payload is not a whole number of float64 values")
    payload = np.frombuffer(body, dtype=_DTYPE)

    sections = {}
    current = None
    for line in header[1:]:
        if line.startswith("[section ") and line.endswith("]"):
            current = line[len("[section "):-1]
            sections[current] = []
        elif current is None:
            raise DataError(f"{path}: text before the first section")
        else:
            sections[current].append(line)

    arrays = {}
    for entry in sections.pop("manifest", []):
        name, shape, offset = entry.split("\t")
        shape = tuple(int(d) for d in shape.split(",")) if shape else ()
        start = int(offset)
        size = int(np.prod(shape)) if shape else 1
        if start + size > payload.size:
            raise DataError(f"{path}: payload too short for {name!r}")
        arrays[name] = payload[start:start + size].reshape(shape).astype(np.float64)
    return sections, arrays
