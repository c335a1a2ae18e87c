"""
Topology snapshot text format.

    n_in n_out nnz
    in_index out_index weight
    ...

Indices are zero-based, weights are written with repr() so that they round-trip exactly.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from loguru import logger

from setnet.errors import TopologyError
from setnet.iotools import yield_lines_from_file
from setnet.sparse.topology import SparseWeights
from setnet.typext import PathType


def save_topology_snapshot(w: SparseWeights, file: PathType) -> Path:
    file = Path(file)
    os.makedirs(file.parent, exist_ok=True)
    lines = [f"{w.n_in} {w.n_out} {w.nnz}"]
    lines += [f"{i} {j} {float(v)!r}" for i, j, v in w.links()]
    file.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Wrote topology snapshot {file} with {w.nnz} links")
    return file


def load_topology_snapshot(file: PathType) -> SparseWeights:
    """
    Raises:
        TopologyError: malformed header or link line, wrong link count, invalid links
    """
    lines = yield_lines_from_file(file)
    try:
        _, header = next(lines)
    except StopIteration as e:
        raise TopologyError(f"Empty topology snapshot {file}") from e
    try:
        n_in, n_out, nnz = (int(x) for x in header.split())
    except ValueError as e:
        raise TopologyError(f"Bad snapshot header {header!r} in {file}") from e
    if n_in < 1 or n_out < 1 or not 0 <= nnz <= n_in * n_out:
        raise TopologyError(
            f"Snapshot header of {file} is out of range: n_in={n_in} n_out={n_out} nnz={nnz}"
        )

    in_index = np.empty(nnz, dtype=np.int64)
    out_index = np.empty(nnz, dtype=np.int64)
    weights = np.empty(nnz, dtype=np.float64)
    n_read = 0
    for line_num, line in lines:
        if n_read >= nnz:
            raise TopologyError(f"More than {nnz} links in {file} (line {line_num})")
        parts = line.split()
        try:
            if len(parts) != 3:
                raise ValueError(f"expected 3 fields, got {len(parts)}")
            in_index[n_read], out_index[n_read] = int(parts[0]), int(parts[1])
            weights[n_read] = float(parts[2])
        except ValueError as e:
            raise TopologyError(f"Bad link line {line_num} in {file}: {e}") from e
        n_read += 1
    if n_read != nnz:
        raise TopologyError(f"Header of {file} declares {nnz} links but {n_read} were found")
    return SparseWeights.from_links(n_in, n_out, in_index, out_index, weights)
