"""
Static config checks: schema, value ranges, the dimension chain and the dataset headers.

Nothing here builds a model or reads a feature payload, so validating a full-scale config is
quick. Every problem becomes one finding, validation never stops at the first.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
from attrs import define, field

from setnet.consts import ActivationKind, FeatureKind, LogZMethod, Task
from setnet.errors import ConfigValidationError, SetnetError
from setnet.experiments.config import ModelSpec, parse_sections
from setnet.experiments.datasets import DatasetDescription, describe_dataset
from setnet.experiments.grid import expand_grid
from setnet.iotools import yield_lines_from_file
from setnet.rbm.checkpoint import HIDDEN_BIAS_FILE, MODEL_FILE, VISIBLE_BIAS_FILE, WEIGHTS_FILE
from setnet.rbm.model import EXACT_MAX_UNITS


@define
class ValidationReport:
    findings: List[str] = field(factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def raise_if_failed(self) -> None:
        if self.findings:
            raise ConfigValidationError(self.findings)

    def format(self) -> str:
        if self.ok:
            return "Config is valid"
        return f"Config has {len(self.findings)} problem(s):\n" + "\n".join(
            f"    {f}" for f in self.findings
        )


def _snapshot_shape(file: Path) -> Optional[tuple]:
    for _, line in yield_lines_from_file(file):
        parts = line.split()
        if len(parts) == 3 and all(p.isdigit() for p in parts):
            return int(parts[0]), int(parts[1])
        return None
    return None


def _check_mlp(model: ModelSpec, desc: Optional[DatasetDescription], sections, findings) -> None:
    sizes = model.sizes
    if sizes is None:
        return
    kinds = model.activation
    if not isinstance(kinds, str) and kinds[-1] != ActivationKind.SOFTMAX:
        findings.append(f"model.activation: the output layer must be softmax, got {kinds[-1]!r}")
    if isinstance(kinds, str) and kinds == ActivationKind.SOFTMAX:
        findings.append("model.activation: softmax is only allowed for the output layer")
    dataset = sections.get("dataset")
    if dataset is not None and dataset.test is None and dataset.n_test is None:
        findings.append("dataset: train-mlp needs a test split (test or n_test)")
    if desc is None:
        return
    if sizes[0] != desc.n_features:
        findings.append(
            f"model.sizes: input size {sizes[0]} does not match the {desc.n_features} "
            f"features of the dataset"
        )
    if desc.n_classes is not None and sizes[-1] != desc.n_classes:
        findings.append(
            f"model.sizes: output size {sizes[-1]} does not match the {desc.n_classes} "
            f"classes of the dataset"
        )


def _check_rbm(model: ModelSpec, desc: Optional[DatasetDescription], sections, findings) -> None:
    train = sections.get("train")
    n_visible = model.n_visible if model.n_visible is not None else (desc and desc.n_features)
    if (
        train is not None
        and train.log_z_method == LogZMethod.EXACT
        and n_visible is not None
        and model.n_hidden is not None
        and min(n_visible, model.n_hidden) > EXACT_MAX_UNITS
    ):
        findings.append(
            f"train.log_z_method: exact needs <= {EXACT_MAX_UNITS} units on one side, the "
            f"model is {n_visible}x{model.n_hidden}"
        )
    if desc is None:
        return
    if model.n_visible is not None and model.n_visible != desc.n_features:
        findings.append(
            f"model.n_visible: {model.n_visible} does not match the {desc.n_features} "
            f"features of the dataset"
        )
    if desc.feature_kind != FeatureKind.BINARY:
        findings.append(
            f"dataset: the RBM needs binary data but the features are {desc.feature_kind}, "
            f"set dataset.binarize"
        )


def _check_checkpoint(directory: Path, desc: Optional[DatasetDescription], findings) -> None:
    files = (MODEL_FILE, WEIGHTS_FILE, VISIBLE_BIAS_FILE, HIDDEN_BIAS_FILE)
    missing = [name for name in files if not (directory / name).is_file()]
    if missing:
        findings.append(f"checkpoint: {directory} is missing {missing}")
        return
    shape = _snapshot_shape(directory / WEIGHTS_FILE)
    if shape is None:
        findings.append(f"checkpoint: bad topology header in {directory / WEIGHTS_FILE}")
    elif desc is not None and shape[0] != desc.n_features:
        findings.append(
            f"checkpoint: the RBM has {shape[0]} visible units but the dataset has "
            f"{desc.n_features} features"
        )


def _check_snapshots(path: Path, sections, findings) -> None:
    if not path.exists():
        findings.append(f"snapshots: no such file or directory {path}")
        return
    if path.is_dir() and not any(path.rglob("*.txt")):
        findings.append(f"snapshots: no snapshot files (*.txt) below {path}")
    analysis = sections.get("analysis")
    shape = None if analysis is None else analysis.image_shape
    if shape is not None and path.is_file():
        snap = _snapshot_shape(path)
        if snap is not None and snap[0] != int(np.prod(shape)):
            findings.append(
                f"analysis.image_shape: {shape} does not match the {snap[0]} inputs of {path}"
            )


def validate(config: Mapping[str, Any], check_data: bool = True) -> ValidationReport:
    """
    Check a raw config mapping without running anything.

    Args:
        config: raw mapping as loaded from YAML
        check_data: read dataset headers, checkpoints and snapshot folders. Without it only
            the config itself is checked, e.g. for bundled configs on a machine without data.
    """
    sections, findings = parse_sections(config)
    task = sections["task"]

    if task == Task.GRID:
        member_task = sections.get("member_task")
        runnable = member_task in Task.values_list() and member_task != Task.GRID
        if runnable and sections["seed"] is not None:
            findings.extend(_validate_grid(config, check_data))
        return ValidationReport(findings)

    desc = None
    dataset = sections.get("dataset")
    if check_data and dataset is not None:
        try:
            desc = describe_dataset(dataset)
        except ConfigValidationError as e:
            findings.extend(e.findings)
        except (SetnetError, OSError, ValueError) as e:
            findings.append(f"dataset: {e}")

    model: ModelSpec = sections.get("model") or ModelSpec()
    if task == Task.TRAIN_MLP:
        _check_mlp(model, desc, sections, findings)
    elif task == Task.TRAIN_RBM:
        _check_rbm(model, desc, sections, findings)
    elif task == Task.EVAL_AIS and check_data and sections.get("checkpoint") is not None:
        _check_checkpoint(sections["checkpoint"], desc, findings)
        ais = sections.get("ais")
        if ais is not None and ais.base_rate_biases is not None and desc is not None:
            if ais.base_rate_biases.size != desc.n_features:
                findings.append(
                    f"ais.base_rate_biases: {ais.base_rate_biases.size} values for "
                    f"{desc.n_features} features"
                )
    elif task == Task.ANALYZE_TOPOLOGY and check_data and sections.get("snapshots") is not None:
        _check_snapshots(sections["snapshots"], sections, findings)
    return ValidationReport(findings)


def _validate_grid(config: Mapping[str, Any], check_data: bool) -> List[str]:
    try:
        members = expand_grid(config)
    except ConfigValidationError as e:
        return e.findings
    findings = []
    # members sharing the dataset would repeat the same dataset findings
    seen: Dict[str, None] = {}
    for member in members:
        for finding in validate(member.config, check_data).findings:
            if finding.startswith("dataset") and finding in seen:
                continue
            seen[finding] = None
            findings.append(f"{member.name}: {finding}")
    return findings
