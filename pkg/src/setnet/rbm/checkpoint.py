"""
RBM checkpoints are directories:

    model.yaml          mode and free-form metadata
    weights.txt         topology snapshot, visible units are the input side
    visible_bias.txt    one value per line, repr precision
    hidden_bias.txt     one value per line, repr precision
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
from loguru import logger

from setnet.errors import DataFormatError
from setnet.iotools import dump_yaml, load_yaml, yield_lines_from_file
from setnet.rbm.model import RbmModel
from setnet.sparse.snapshot import load_topology_snapshot, save_topology_snapshot
from setnet.typext import PathType

MODEL_FILE = "model.yaml"
WEIGHTS_FILE = "weights.txt"
VISIBLE_BIAS_FILE = "visible_bias.txt"
HIDDEN_BIAS_FILE = "hidden_bias.txt"


def _write_vector(values: np.ndarray, file: Path) -> None:
    file.write_text("".join(f"{float(x)!r}\n" for x in values), encoding="utf-8")


def _read_vector(file: Path) -> np.ndarray:
    try:
        return np.array([float(line) for _, line in yield_lines_from_file(file)])
    except ValueError as e:
        raise DataFormatError(f"Bad bias value in {file}: {e}") from e


def save_rbm_checkpoint(
    rbm: RbmModel, directory: PathType, meta: Optional[Mapping[str, Any]] = None
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_topology_snapshot(rbm.weights, directory / WEIGHTS_FILE)
    _write_vector(rbm.visible_bias, directory / VISIBLE_BIAS_FILE)
    _write_vector(rbm.hidden_bias, directory / HIDDEN_BIAS_FILE)
    dump_yaml({"mode": rbm.mode, "meta": dict(meta or {})}, directory / MODEL_FILE)
    logger.info(f"Saved RBM checkpoint to {directory}")
    return directory


def load_rbm_checkpoint(directory: PathType) -> Tuple[RbmModel, Dict[str, Any]]:
    """
    Raises:
        DataFormatError: missing files or bad bias values
        ShapeMismatchError: bias lengths do not match the topology
        TopologyError: malformed snapshot
    """
    directory = Path(directory)
    for name in (MODEL_FILE, WEIGHTS_FILE, VISIBLE_BIAS_FILE, HIDDEN_BIAS_FILE):
        if not (directory / name).is_file():
            raise DataFormatError(f"No {name} in checkpoint directory {directory}")
    info = load_yaml(directory / MODEL_FILE)
    rbm = RbmModel(
        load_topology_snapshot(directory / WEIGHTS_FILE),
        _read_vector(directory / VISIBLE_BIAS_FILE),
        _read_vector(directory / HIDDEN_BIAS_FILE),
        info["mode"],
    )
    return rbm, info.get("meta") or {}
