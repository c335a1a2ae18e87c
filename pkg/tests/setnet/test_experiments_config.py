import copy
from pathlib import Path

import pytest

from setnet.errors import ConfigValidationError
from setnet.experiments.config import (
    DEFAULT_SNAPSHOT_EVERY,
    DatasetSpec,
    ExperimentConfig,
    list_bundled_configs,
    load_config,
    resolve_config_path,
    set_dotted,
)
from setnet.mlp.config import TrainConfig
from setnet.rbm.config import RbmTrainConfig

TOY_MLP = {
    "task": "train-mlp",
    "name": "toy-mlp",
    "seed": 3,
    "dataset": {
        "format": "synthetic",
        "train": {"kind": "linearly-separable", "n_samples": 200, "n_features": 30},
        "n_test": 50,
    },
    "model": {"sizes": [30, 40, 2], "mode": "set"},
    "train": {"epochs": 2, "batch_size": 20, "evolution": {"epsilon": 3}},
}


def _findings(raw) -> list:
    with pytest.raises(ConfigValidationError) as e:
        ExperimentConfig.from_dict(raw)
    return e.value.findings


def test_bundled_configs_are_listed():
    names = list_bundled_configs()
    assert "mnist_setmlp_desk" in names
    assert "fashion_mnist_ablation_grid" in names


def test_load_bundled_config_by_name():
    raw = load_config("mnist_setmlp_desk")
    assert raw["name"] == "mnist_setmlp_desk"
    assert raw["task"] == "train-mlp"
    assert raw["model"]["sizes"] == [784, 300, 300, 300, 10]
    assert resolve_config_path("mnist_setmlp_desk.yaml").name == "mnist_setmlp_desk.yaml"


def test_config_alias_resolves_to_renamed_config():
    assert resolve_config_path("fig6_grid") == resolve_config_path("fashion_mnist_ablation_grid")
    assert load_config("fig6_grid")["task"] == "grid"


def test_load_config_file_wins(tmp_path):
    file = tmp_path / "mine.yaml"
    file.write_text("task: train-mlp\nseed: 1\n", encoding="utf-8")
    raw = load_config(file)
    assert raw == {"task": "train-mlp", "seed": 1, "name": "mine"}


def test_load_config_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config("no_such_config")
    file = tmp_path / "list.yaml"
    file.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigValidationError):
        load_config(file)


def test_set_dotted():
    dct = {"train": {"epochs": 3}}
    set_dotted(dct, "train.evolution.epsilon", 11)
    set_dotted(dct, "seed", 4)
    assert dct == {"train": {"epochs": 3, "evolution": {"epsilon": 11}}, "seed": 4}
    with pytest.raises(ConfigValidationError):
        set_dotted(dct, "train.epochs.value", 1)


def test_toy_config_parses(tmp_path, monkeypatch):
    monkeypatch.setenv("SETNET_OUTPUT_DIR", str(tmp_path))
    cfg = ExperimentConfig.from_dict(TOY_MLP)
    assert isinstance(cfg.train, TrainConfig)
    assert cfg.train.seed == 3
    assert cfg.train.snapshot_every == DEFAULT_SNAPSHOT_EVERY
    assert cfg.train.evolution.epsilon == 3
    assert cfg.model.sizes == [30, 40, 2]
    assert cfg.output_dir == tmp_path / "toy-mlp"
    assert cfg.raw == TOY_MLP


def test_relative_paths_resolve_against_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SETNET_OUTPUT_DIR", str(tmp_path))
    raw = {**copy.deepcopy(TOY_MLP), "output_dir": "runs/a"}
    assert ExperimentConfig.from_dict(raw).output_dir == tmp_path / "runs" / "a"
    absolute = (tmp_path / "elsewhere").as_posix()
    raw["output_dir"] = absolute
    assert ExperimentConfig.from_dict(raw).output_dir == Path(absolute)


def test_rbm_config_parses():
    raw = load_config("rbm_prototypes_desk")
    cfg = ExperimentConfig.from_dict(raw)
    assert isinstance(cfg.train, RbmTrainConfig)
    assert cfg.train.evolution.epsilon == 11
    assert cfg.train.seed == raw["seed"]
    assert cfg.model.n_hidden == 16


def test_zero_epsilon_is_a_finding():
    raw = copy.deepcopy(TOY_MLP)
    raw["train"]["evolution"]["epsilon"] = 0
    findings = _findings(raw)
    assert len(findings) == 1
    assert findings[0].startswith("train")
    assert "epsilon" in findings[0]


def test_findings_of_all_sections_at_once():
    raw = copy.deepcopy(TOY_MLP)
    del raw["seed"]
    raw["extra"] = 1
    raw["train"]["seed"] = 5
    raw["model"]["mode"] = "sparse"
    raw["dataset"]["binarize"] = 2.0
    findings = _findings(raw)
    text = "\n".join(findings)
    assert "seed: missing" in text
    assert "['extra']" in text
    assert "train.seed: set the top-level seed instead" in text
    assert "model mode" in text
    assert "binarize" in text


def test_unknown_task_and_bad_seed():
    findings = _findings({"task": "train-cnn", "name": "x", "seed": -1})
    assert any(f.startswith("task:") for f in findings)
    assert any(f.startswith("seed:") for f in findings)


def test_required_sections():
    findings = _findings({"task": "train-rbm", "name": "x", "seed": 0})
    assert findings == ["['dataset', 'model']: required by task train-rbm"]
    raw = copy.deepcopy(TOY_MLP)
    del raw["model"]["sizes"]
    assert _findings(raw) == ["model.sizes: required by task train-mlp"]


def test_dataset_spec_findings():
    with pytest.raises(ConfigValidationError) as e:
        DatasetSpec.from_dict(
            {
                "format": "idx",
                "train": {"images": "a"},
                "test": {"images": "b", "labels": "c"},
                "n_test": 10,
                "max_train": 0,
            }
        )
    text = "\n".join(e.value.findings)
    assert "missing ['labels']" in text
    assert "mutually exclusive" in text
    assert "max_train" in text


def test_dataset_spec_unknown_loader_key():
    with pytest.raises(ConfigValidationError) as e:
        DatasetSpec.from_dict({"format": "csv", "train": {"file": "x.csv", "sep": ";"}})
    assert "unknown key(s) ['sep']" in e.value.findings[0]


def test_synthetic_needs_n_test():
    with pytest.raises(ConfigValidationError):
        DatasetSpec.from_dict(
            {
                "format": "synthetic",
                "train": {"kind": "prototype-mixture"},
                "test": {"kind": "prototype-mixture"},
            }
        )


def test_grid_config_keeps_its_own_keys():
    cfg = ExperimentConfig.from_dict(load_config("fashion_mnist_ablation_grid"))
    assert cfg.task == "grid"
    assert cfg.member_task == "train-mlp"
    assert list(cfg.grid) == ["model", "regularizer", "momentum", "activation"]
    assert cfg.train is None
