"""
MLP checkpoints are directories:

    model.yaml      mode, sizes, activations and free-form metadata (epoch, config, ...)
    layer_1.txt     topology snapshot of each layer, see setnet.sparse.snapshot
    params.npz      bias_<k> and srelu_<k>_<param> arrays
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from loguru import logger

from setnet.consts import ActivationKind
from setnet.errors import DataFormatError
from setnet.iotools import dump_yaml, load_npz_dict, load_yaml, save_npz_dict
from setnet.mlp.model import MlpModel
from setnet.sparse.activations import SRELU_PARAM_NAMES, ActivationSpec, SReLUParams
from setnet.sparse.layers import SparseLayer
from setnet.sparse.snapshot import load_topology_snapshot, save_topology_snapshot
from setnet.typext import PathType

MODEL_FILE = "model.yaml"
PARAMS_FILE = "params.npz"


def _layer_file(k: int) -> str:
    return f"layer_{k}.txt"


def save_mlp_checkpoint(
    model: MlpModel, directory: PathType, meta: Optional[Mapping[str, Any]] = None
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    arrays = {}
    for k, layer in enumerate(model.layers, start=1):
        save_topology_snapshot(layer.weights, directory / _layer_file(k))
        arrays[f"bias_{k}"] = layer.bias
        params = layer.activation.srelu_params
        if params is not None:
            for name, arr in params.arrays().items():
                arrays[f"srelu_{k}_{name}"] = arr
    save_npz_dict(directory / PARAMS_FILE, arrays)
    dump_yaml(
        {
            "mode": model.mode,
            "sizes": model.sizes,
            "activations": model.activations,
            "meta": dict(meta or {}),
        },
        directory / MODEL_FILE,
    )
    logger.info(f"Saved MLP checkpoint to {directory}")
    return directory


def load_mlp_checkpoint(directory: PathType) -> Tuple[MlpModel, Dict[str, Any]]:
    """
    Returns:
        the model and the metadata stored with it

    Raises:
        DataFormatError: missing files or arrays
        TopologyError: malformed layer snapshot
    """
    directory = Path(directory)
    if not (directory / MODEL_FILE).is_file():
        raise DataFormatError(f"No {MODEL_FILE} in checkpoint directory {directory}")
    info = load_yaml(directory / MODEL_FILE)
    arrays = load_npz_dict(directory / PARAMS_FILE)
    layers = []
    for k, kind in enumerate(info["activations"], start=1):
        weights = load_topology_snapshot(directory / _layer_file(k))
        try:
            bias = arrays[f"bias_{k}"]
            params = None
            if kind == ActivationKind.SRELU:
                params = SReLUParams(*(arrays[f"srelu_{k}_{n}"] for n in SRELU_PARAM_NAMES))
        except KeyError as e:
            raise DataFormatError(f"Checkpoint {directory} misses array {e}") from e
        layers.append(SparseLayer(weights, bias, ActivationSpec(kind, params)))
    model = MlpModel(layers, info["mode"])
    if model.sizes != list(info["sizes"]):
        raise DataFormatError(
            f"Checkpoint {directory} declares sizes {info['sizes']} but layers have {model.sizes}"
        )
    return model, info.get("meta") or {}
