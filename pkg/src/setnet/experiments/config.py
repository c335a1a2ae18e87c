"""
Experiment configuration files.

One YAML file per experiment, the schema is documented in README.md. Bundled configs live in
setnet/configs and can be referenced by bare name:

    >>> raw = load_config("mnist_setmlp_desk")
    >>> cfg = ExperimentConfig.from_dict(raw)

Parsing collects the problems of all sections before raising, so a broken config reports
everything at once.
"""

from __future__ import annotations

import copy
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from attrs import define, field

from setnet.analysis.powerlaw import MIN_MONTE_CARLO
from setnet.attrsext import from_dict_strict, int_at_least
from setnet.consts import ActivationKind, DatasetFormat, FitMethod, ModelMode, Side, Task
from setnet.errors import ConfigValidationError
from setnet.iotools import load_yaml
from setnet.mlp.config import TrainConfig
from setnet.paths import get_output_dir, resolve_data_path, resolve_output_path
from setnet.rbm.config import AisConfig, RbmTrainConfig
from setnet.typext import PathType

CONFIGS_DIR = Path(__file__).parent.parent / "configs"
COMMON_KEYS = ("task", "name", "seed", "output_dir", "description")
TASK_KEYS = {
    Task.TRAIN_MLP: ("dataset", "model", "train"),
    Task.TRAIN_RBM: ("dataset", "model", "train"),
    Task.EVAL_AIS: ("checkpoint", "ais", "dataset"),
    Task.ANALYZE_TOPOLOGY: ("snapshots", "analysis"),
    Task.GRID: (
        "member_task",
        "grid",
        "dataset",
        "model",
        "train",
        "ais",
        "analysis",
        "checkpoint",
        "snapshots",
    ),
}
REQUIRED_KEYS = {
    Task.TRAIN_MLP: ("dataset", "model"),
    Task.TRAIN_RBM: ("dataset", "model"),
    Task.EVAL_AIS: ("checkpoint",),
    Task.ANALYZE_TOPOLOGY: ("snapshots",),
    Task.GRID: ("member_task", "grid"),
}
# topology trajectories need snapshots even when a config does not ask for them
DEFAULT_SNAPSHOT_EVERY = 10

# loader arguments per dataset format: required, optional
SPLIT_KEYS = {
    DatasetFormat.IDX: (("images", "labels"), ()),
    DatasetFormat.CIFAR10: (("files",), ()),
    DatasetFormat.CSV: (
        ("file",),
        ("label_column", "has_header", "delimiter", "max_rows", "skip_rows"),
    ),
    DatasetFormat.SPARSE_BINARY: (("file",), ("n_features",)),
    DatasetFormat.SYNTHETIC: (("kind",), None),  # None: any synthetic parameter
}
FILE_KEYS = {
    DatasetFormat.IDX: ("images", "labels"),
    DatasetFormat.CIFAR10: ("files",),
    DatasetFormat.CSV: ("file",),
    DatasetFormat.SPARSE_BINARY: ("file",),
    DatasetFormat.SYNTHETIC: (),
}

# older names of bundled configs
CONFIG_ALIASES = {"fig6_grid": "fashion_mnist_ablation_grid"}

def list_bundled_configs() -> List[str]:
    return sorted(p.stem for p in CONFIGS_DIR.glob("*.yaml"))


def resolve_config_path(name_or_path: PathType) -> Path:
    """Existing files win, otherwise the bundled config of that name."""
    path = Path(name_or_path)
    if path.is_file():
        return path
    name = path.stem if path.suffix in (".yaml", ".yml") else path.name
    name = CONFIG_ALIASES.get(name, name)
    bundled = CONFIGS_DIR / f"{name}.yaml"
    if bundled.is_file():
        return bundled
    raise FileNotFoundError(
        f"Config {name_or_path} is neither a file nor a bundled config, bundled configs: "
        f"{list_bundled_configs()}"
    )


def load_config(name_or_path: PathType) -> Dict[str, Any]:
    """Raw config mapping, the name defaults to the file stem."""
    path = resolve_config_path(name_or_path)
    raw = load_yaml(path)
    if not isinstance(raw, dict):
        raise ConfigValidationError([f"{path}: top level must be a mapping, got {type(raw)}"])
    raw.setdefault("name", path.stem)
    return raw


def set_dotted(dct: Dict[str, Any], dotted_key: str, value: Any) -> None:
    """set_dotted(d, "train.evolution.epsilon", 11) creates missing levels on the way."""
    *parents, last = dotted_key.split(".")
    node = dct
    for i, key in enumerate(parents):
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            raise ConfigValidationError(
                [f"{'.'.join(parents[: i + 1])}: cannot set {dotted_key}, not a mapping"]
            )
        node = child
    node[last] = copy.deepcopy(value)


def _check_format(_instance, _attribute, value):
    DatasetFormat.check(value, "dataset format")


def _to_optional_shape(value: Any) -> Optional[Tuple[int, ...]]:
    return None if value is None else tuple(int(v) for v in value)


@define
class DatasetSpec:
    """
    Where the data comes from and how it is preprocessed.

    Args:
        format: idx, cifar10, csv, sparse-binary or synthetic
        train: loader arguments of the training split, file paths relative to SETNET_DATA_DIR
            idx: images, labels
            cifar10: files (one path or a list)
            csv: file, label_column, has_header, delimiter, max_rows, skip_rows
            sparse-binary: file, n_features
            synthetic: kind and the generator parameters
        test: loader arguments of the test split
        n_test: split this many rows (or this fraction) off the training data instead
        name: dataset name in logs, defaults to the format
        binarize: threshold for binary features
        standardize: zero mean and unit variance with training statistics
        max_train: random subsample of the training rows
        max_test: random subsample of the test rows
        stratified: keep class proportions when subsampling
        n_classes: declared number of classes, for formats whose headers do not carry it
        image_shape: shape of one sample as an image, for connectivity maps
        use_cache: cache parsed IDX and CIFAR-10 files with joblib
    """

    format: str = field(validator=_check_format)
    train: Dict[str, Any] = field(factory=dict)
    test: Optional[Dict[str, Any]] = None
    n_test: Optional[Union[int, float]] = None
    name: Optional[str] = None
    binarize: Optional[float] = None
    standardize: bool = False
    max_train: Optional[int] = None
    max_test: Optional[int] = None
    stratified: bool = True
    n_classes: Optional[int] = None
    image_shape: Optional[Tuple[int, ...]] = field(default=None, converter=_to_optional_shape)
    use_cache: bool = False

    def __attrs_post_init__(self):
        findings = []
        for split in ("train", "test"):
            args = getattr(self, split)
            if args is None:
                continue
            if not isinstance(args, Mapping):
                findings.append(f"{split}: must be a mapping of loader arguments")
                continue
            required, optional = SPLIT_KEYS[self.format]
            missing = [k for k in required if k not in args]
            if missing:
                findings.append(f"{split}: missing {missing} for format {self.format}")
            if optional is not None:
                unknown = sorted(set(args) - set(required) - set(optional))
                if unknown:
                    findings.append(
                        f"{split}: unknown key(s) {unknown} for format {self.format}, "
                        f"allowed: {sorted(required + optional)}"
                    )
        if self.test is not None and self.n_test is not None:
            findings.append("test and n_test are mutually exclusive")
        if self.format == DatasetFormat.SYNTHETIC and self.test is not None:
            findings.append(
                "test: split synthetic data with n_test, a second draw has other prototypes"
            )
        if self.binarize is not None and not 0 < self.binarize <= 1:
            findings.append(f"binarize: threshold must be in (0, 1] but is {self.binarize}")
        for key in ("max_train", "max_test", "n_classes"):
            value = getattr(self, key)
            if value is not None and (not isinstance(value, int) or value < 1):
                findings.append(f"{key}: must be an integer >= 1 but is {value!r}")
        if findings:
            raise ConfigValidationError(findings)

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> DatasetSpec:
        return from_dict_strict(cls, dct, "dataset")

    @property
    def display_name(self) -> str:
        return self.name or self.format


def _to_activation(value: Any) -> Union[str, List[str]]:
    return value if isinstance(value, str) else list(value)


@define
class ModelSpec:
    """
    Args:
        sizes: MLP layer sizes including input and output
        activation: MLP hidden activation, or one kind per layer ending in softmax
        mode: set, fixprob or dense
        n_hidden: RBM hidden units
        n_visible: RBM visible units, defaults to the number of features
    """

    sizes: Optional[List[int]] = None
    activation: Union[str, List[str]] = field(
        default=ActivationKind.RELU, converter=_to_activation
    )
    mode: str = ModelMode.SET
    n_hidden: Optional[int] = None
    n_visible: Optional[int] = None

    def __attrs_post_init__(self):
        ModelMode.check(self.mode, "model mode")
        kinds = [self.activation] if isinstance(self.activation, str) else self.activation
        for kind in kinds:
            ActivationKind.check(kind, "activation")
        if self.sizes is not None:
            if (
                len(self.sizes) < 2
                or any(isinstance(s, bool) or not isinstance(s, int) for s in self.sizes)
                or min(self.sizes) < 1
            ):
                raise ValueError(f"sizes must be >= 2 positive integers, got {self.sizes}")
            if not isinstance(self.activation, str) and len(kinds) != len(self.sizes) - 1:
                raise ValueError(
                    f"{len(kinds)} activations for {len(self.sizes) - 1} layers {self.sizes}"
                )
        for key in ("n_hidden", "n_visible"):
            value = getattr(self, key)
            if value is not None and (not isinstance(value, int) or value < 1):
                raise ValueError(f"{key} must be an integer >= 1 but is {value!r}")

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> ModelSpec:
        return from_dict_strict(cls, dct, "model")


@define
class AnalysisConfig:
    """
    Power-law analysis of topology snapshots.

    Args:
        side: output analyses the in-degrees of the receiving neurons, input the out-degrees
            of the sending neurons (the visible units of an RBM)
        d_min: lower degree cutoff, None selects it by minimizing the KS distance
        n_monte_carlo: resamples per p-value
        fit_method: discrete or approximate
        with_p_value: run the Monte-Carlo test against the binomial null
        image_shape: (height, width) to export connectivity maps of matching input layers
    """

    side: str = Side.OUTPUT
    d_min: Optional[int] = 2
    n_monte_carlo: int = field(default=1000, validator=int_at_least(MIN_MONTE_CARLO))
    fit_method: str = FitMethod.DISCRETE
    with_p_value: bool = True
    image_shape: Optional[Tuple[int, ...]] = field(default=None, converter=_to_optional_shape)

    def __attrs_post_init__(self):
        Side.check(self.side, "side")
        FitMethod.check(self.fit_method, "fit method")
        if self.d_min is not None and (not isinstance(self.d_min, int) or self.d_min < 1):
            raise ValueError(f"d_min must be None or an integer >= 1 but is {self.d_min!r}")
        if self.image_shape is not None and len(self.image_shape) != 2:
            raise ValueError(f"image_shape must be (height, width), got {self.image_shape}")

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> AnalysisConfig:
        return from_dict_strict(cls, dct, "analysis")


@define
class ExperimentConfig:
    """
    Typed view of one experiment. Build it with from_dict, which applies the top-level seed
    to the training and annealing settings.

    Args:
        task: train-mlp, train-rbm, eval-ais, analyze-topology or grid
        name: experiment name, also the default output folder name
        seed: root seed of everything random in the run
        output_dir: where results go, defaults to SETNET_OUTPUT_DIR/name
        dataset: data source
        model: architecture of the train tasks
        train: TrainConfig (train-mlp) or RbmTrainConfig (train-rbm)
        ais: annealing settings of eval-ais
        analysis: settings of analyze-topology
        checkpoint: RBM checkpoint directory for eval-ais
        snapshots: snapshot file or directory for analyze-topology
        member_task: task of every grid member
        grid: axes of the grid, {axis: {label: {dotted.key: value}}}
        raw: the mapping this config was built from
    """

    task: str
    name: str
    seed: int
    output_dir: Path
    dataset: Optional[DatasetSpec] = None
    model: ModelSpec = field(factory=ModelSpec)
    train: Optional[Union[TrainConfig, RbmTrainConfig]] = None
    ais: AisConfig = field(factory=AisConfig)
    analysis: AnalysisConfig = field(factory=AnalysisConfig)
    checkpoint: Optional[Path] = None
    snapshots: Optional[Path] = None
    member_task: Optional[str] = None
    grid: Dict[str, Any] = field(factory=dict)
    raw: Dict[str, Any] = field(factory=dict, repr=False)

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> ExperimentConfig:
        """
        Raises:
            ConfigValidationError: with the problems of all sections
        """
        sections, findings = parse_sections(dct)
        if findings:
            raise ConfigValidationError(findings)
        return cls(raw=copy.deepcopy(dict(dct)), **sections)


def _parse(findings: List[str], fn: Callable[[Any], Any], value: Any, what: str) -> Any:
    if not isinstance(value, Mapping):
        findings.append(f"{what}: must be a mapping, got {type(value).__name__}")
        return None
    try:
        return fn(value)
    except ConfigValidationError as e:
        findings.extend(e.findings)
    return None


def _with_seed(section: Mapping[str, Any], seed: Any, what: str, findings: List[str]) -> Dict:
    section = dict(section)
    if "seed" in section:
        findings.append(f"{what}.seed: set the top-level seed instead")
    section["seed"] = seed
    return section


def _check_top_level(dct: Mapping[str, Any], findings: List[str]) -> Tuple[Optional[str], Any]:
    task = dct.get("task")
    if task not in Task.values_list():
        findings.append(f"task: must be one of {Task.values_list()}, got {task!r}")
        task = None
    seed = dct.get("seed")
    if seed is None:
        findings.append("seed: missing, every experiment needs a seed")
    elif isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        findings.append(f"seed: must be an integer >= 0 but is {seed!r}")
        seed = None
    name = dct.get("name")
    if not isinstance(name, str) or not name:
        findings.append(f"name: must be a non-empty string, got {name!r}")
    if task is not None:
        allowed = set(COMMON_KEYS) | set(TASK_KEYS[task])
        unknown = sorted(set(dct) - allowed)
        if unknown:
            findings.append(f"{unknown}: not used by task {task}, allowed: {sorted(allowed)}")
        missing = [k for k in REQUIRED_KEYS[task] if dct.get(k) is None]
        if missing:
            findings.append(f"{missing}: required by task {task}")
    return task, seed


def parse_sections(dct: Mapping[str, Any]) -> Tuple[Dict[str, Any], List[str]]:
    """
    Parse every section that is present, returns (constructor arguments, findings).

    Sections that fail to parse are left out of the arguments, so cross-section checks can
    still run on the rest. Grid configs only get their own keys checked here, the shared
    sections are checked per member after expansion.
    """
    findings: List[str] = []
    task, seed = _check_top_level(dct, findings)
    out: Dict[str, Any] = {"task": task, "name": dct.get("name"), "seed": seed}
    output_dir = dct.get("output_dir")
    out["output_dir"] = (
        get_output_dir() / str(dct.get("name"))
        if output_dir is None
        else resolve_output_path(output_dir)
    )
    if task == Task.GRID:
        member_task = dct.get("member_task")
        if member_task == Task.GRID or member_task not in Task.values_list():
            findings.append(
                f"member_task: must be one of {Task.values_list()[:-1]}, got {member_task!r}"
            )
        out["member_task"] = member_task
        out["grid"] = dict(dct.get("grid") or {})
        return out, findings

    if dct.get("dataset") is not None:
        out["dataset"] = _parse(findings, DatasetSpec.from_dict, dct["dataset"], "dataset")
    if dct.get("model") is not None:
        model = _parse(findings, ModelSpec.from_dict, dct["model"], "model")
        if model is not None:
            out["model"] = model

    if task in (Task.TRAIN_MLP, Task.TRAIN_RBM):
        train = _with_seed(dct.get("train") or {}, seed, "train", findings)
        train.setdefault("snapshot_every", DEFAULT_SNAPSHOT_EVERY)
        train_cls = TrainConfig if task == Task.TRAIN_MLP else RbmTrainConfig
        out["train"] = _parse(findings, train_cls.from_dict, train, "train")
    if task == Task.TRAIN_MLP and out.get("model") is not None and out["model"].sizes is None:
        findings.append("model.sizes: required by task train-mlp")
    if task == Task.TRAIN_RBM and out.get("model") is not None and out["model"].n_hidden is None:
        findings.append("model.n_hidden: required by task train-rbm")

    if task == Task.EVAL_AIS:
        ais = _with_seed(dct.get("ais") or {}, seed, "ais", findings)
        parsed = _parse(findings, AisConfig.from_dict, ais, "ais")
        if parsed is not None:
            out["ais"] = parsed
    if dct.get("analysis") is not None:
        parsed = _parse(findings, AnalysisConfig.from_dict, dct["analysis"], "analysis")
        if parsed is not None:
            out["analysis"] = parsed
    for key in ("checkpoint", "snapshots"):
        if dct.get(key) is not None:
            out[key] = resolve_output_path(dct[key])
    return out, findings


def required_files(spec: DatasetSpec) -> List[Tuple[str, Path]]:
    """(config key, resolved path) of every file the dataset reads."""
    files = []
    for split in ("train", "test"):
        args = getattr(spec, split) or {}
        for key in FILE_KEYS[spec.format]:
            if key not in args:
                continue
            value = args[key]
            values: Sequence = value if isinstance(value, (list, tuple)) else [value]
            for i, v in enumerate(values):
                suffix = f"[{i}]" if isinstance(value, (list, tuple)) else ""
                files.append((f"dataset.{split}.{key}{suffix}", resolve_data_path(str(v))))
    return files
