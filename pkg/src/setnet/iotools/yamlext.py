"""
Wrapper functions for YAML I/O.
"""

import os
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from setnet.iotools.file_reader import read_text_from_file_or_io
from setnet.typext import PathOrIO, PathTypeCls


def load_yaml(file_or_io: PathOrIO) -> Any:
    yaml_str = read_text_from_file_or_io(file_or_io)
    return loads_yaml(yaml_str)


def loads_yaml(yaml_str: str) -> Any:
    return yaml.load(yaml_str, Loader=yaml.SafeLoader)


def dump_yaml(obj: Any, file_or_io: PathOrIO, create_parent=False, **kwargs) -> None:
    """Convert python object to yaml string and write to file. See dumps_yaml."""
    s = dumps_yaml(obj, **kwargs)
    if isinstance(file_or_io, PathTypeCls):
        if create_parent:
            os.makedirs(Path(file_or_io).parent, exist_ok=True)
        Path(file_or_io).write_text(s, encoding="utf8")
        return
    file_or_io.write(s)


def _to_plain(x: Any) -> Any:
    # yaml.SafeDumper does not understand pathlib.Path, numpy scalars or tuples
    if isinstance(x, dict):
        return {k: _to_plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_plain(v) for v in x]
    if isinstance(x, Path):
        return x.as_posix()
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


def dumps_yaml(obj: Any, sort_keys: bool = False, **kwargs) -> str:
    """Convert python object to a standard format yaml string, keeping key order."""
    return yaml.dump(_to_plain(obj), Dumper=yaml.SafeDumper, sort_keys=sort_keys, **kwargs)
