from .config import (
    AnalysisConfig,
    DatasetSpec,
    ExperimentConfig,
    ModelSpec,
    list_bundled_configs,
    load_config,
)
from .datasets import DatasetDescription, describe_dataset, load_datasets
from .grid import GridMember, expand_grid
from .runner import run, run_experiment
from .validate import ValidationReport, validate

__all__ = [
    "AnalysisConfig",
    "DatasetSpec",
    "ExperimentConfig",
    "ModelSpec",
    "list_bundled_configs",
    "load_config",
    "DatasetDescription",
    "describe_dataset",
    "load_datasets",
    "GridMember",
    "expand_grid",
    "run",
    "run_experiment",
    "ValidationReport",
    "validate",
]
