"""
Grid expansion. A grid config holds a base experiment plus axes of labeled overrides:

    task: grid
    member_task: train-mlp
    grid:
      model:
        set: {model.mode: set}
        fixprob: {model.mode: fixprob}
      activation:
        relu: {model.activation: relu}
        srelu: {model.activation: srelu}

Members are the cross product of the axes in file order, named by their labels joined with
"-" (set-relu, set-srelu, fixprob-relu, fixprob-srelu). Member i gets the seed
derive_seed(seed, i).
"""

from __future__ import annotations

import copy
import itertools
from typing import Any, Dict, List, Mapping, Tuple

from attrs import define

from setnet.errors import ConfigValidationError
from setnet.experiments.config import set_dotted
from setnet.typext import derive_seed

# keys of the grid config that do not carry over to its members
GRID_ONLY_KEYS = ("task", "member_task", "grid", "name", "seed", "output_dir", "description")
FORBIDDEN_OVERRIDES = ("task", "name", "seed", "output_dir", "grid", "member_task")


@define
class GridMember:
    index: int
    name: str
    labels: Tuple[str, ...]
    config: Dict[str, Any]


def _check_axes(grid: Any) -> List[str]:
    if not isinstance(grid, Mapping) or not grid:
        return ["grid: must be a non-empty mapping {axis: {label: {dotted.key: value}}}"]
    findings = []
    for axis, entries in grid.items():
        if not isinstance(entries, Mapping) or not entries:
            findings.append(f"grid.{axis}: must be a non-empty mapping of labels")
            continue
        for label, overrides in entries.items():
            if not isinstance(label, str) or not label or "/" in label:
                findings.append(f"grid.{axis}: label {label!r} must be a string without '/'")
            if overrides is None:
                continue
            if not isinstance(overrides, Mapping):
                findings.append(f"grid.{axis}.{label}: must be a mapping of dotted keys")
                continue
            for key in overrides:
                if str(key).split(".")[0] in FORBIDDEN_OVERRIDES:
                    findings.append(f"grid.{axis}.{label}: cannot override {key}")
    return findings


def expand_grid(raw: Mapping[str, Any]) -> List[GridMember]:
    """
    Raises:
        ConfigValidationError: malformed axes or overrides
    """
    findings = _check_axes(raw.get("grid"))
    if findings:
        raise ConfigValidationError(findings)
    base = {k: copy.deepcopy(v) for k, v in raw.items() if k not in GRID_ONLY_KEYS}
    base["task"] = raw.get("member_task")
    axes = [list(entries.items()) for entries in raw["grid"].values()]
    members = []
    for index, combo in enumerate(itertools.product(*axes)):
        config = copy.deepcopy(base)
        labels = tuple(label for label, _ in combo)
        for _, overrides in combo:
            for dotted_key, value in (overrides or {}).items():
                set_dotted(config, str(dotted_key), value)
        name = "-".join(labels)
        config["name"] = name
        config["seed"] = derive_seed(raw["seed"], index)
        members.append(GridMember(index, name, labels, config))
    names = [m.name for m in members]
    if len(set(names)) != len(names):
        raise ConfigValidationError([f"grid: member names are not unique: {names}"])
    return members
