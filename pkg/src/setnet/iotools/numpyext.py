"""
Save and load flat dicts of numpy arrays as .npz, used for MLP checkpoints.

Scalars and strings are stored as 0-d arrays and converted back on load.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Dict

import numpy as np

from setnet.typext import PathType


def save_npz_dict(file: PathType, arrays: Dict[str, Any], compressed: bool = True) -> Path:
    file = Path(file)
    os.makedirs(file.parent, exist_ok=True)
    save_fn = np.savez_compressed if compressed else np.savez
    with file.open("wb") as fh:
        save_fn(fh, **{k: np.asarray(v) for k, v in arrays.items()})
    return file


def load_npz_dict(file: PathType) -> Dict[str, Any]:
    out = {}
    with np.load(Path(file), allow_pickle=False) as npz:
        for k in npz.files:
            arr = npz[k]
            out[k] = arr.item() if arr.ndim == 0 else arr
    return out
