import pytest

from setnet.errors import ConfigValidationError
from setnet.experiments.config import ExperimentConfig, load_config
from setnet.experiments.grid import expand_grid
from setnet.experiments.validate import validate
from setnet.typext import derive_seed


def test_ablation_grid_has_36_members():
    raw = load_config("fashion_mnist_ablation_grid")
    members = expand_grid(raw)
    assert len(members) == 36
    assert len({m.name for m in members}) == 36
    assert [m.index for m in members] == list(range(36))
    assert members[0].name == "set-l1-nesterov-relu"
    assert members[-1].name == "dense-none-plain-srelu"
    assert validate(raw, check_data=False).ok


def test_grid_member_configs():
    raw = load_config("fashion_mnist_ablation_grid")
    by_name = {m.name: m for m in expand_grid(raw)}
    member = by_name["fixprob-l1-plain-srelu"]
    cfg = ExperimentConfig.from_dict(member.config)
    assert cfg.task == "train-mlp"
    assert cfg.model.mode == "fixprob"
    assert cfg.model.activation == "srelu"
    assert cfg.train.l1_rate == pytest.approx(1e-7)
    assert cfg.train.weight_decay_l2 == 0.0
    assert cfg.train.nesterov is False
    assert cfg.seed == derive_seed(raw["seed"], member.index)
    # shared sections are copied, not referenced
    member.config["train"]["epochs"] = 1
    assert raw["train"]["epochs"] != 1


def test_grid_member_seeds_differ():
    seeds = [m.config["seed"] for m in expand_grid(load_config("fashion_mnist_ablation_grid"))]
    assert len(set(seeds)) == len(seeds)


def test_empty_overrides_are_allowed():
    raw = {
        "task": "grid",
        "member_task": "train-mlp",
        "seed": 1,
        "grid": {"repeat": {"a": None, "b": {}}},
    }
    assert [m.name for m in expand_grid(raw)] == ["a", "b"]


@pytest.mark.parametrize(
    "grid",
    [
        {},
        {"axis": {}},
        {"axis": {"x": {"seed": 3}}},
        {"axis": {"x/y": {"train.epochs": 3}}},
        {"axis": {"x": [1, 2]}},
    ],
)
def test_bad_axes(grid):
    raw = {"task": "grid", "member_task": "train-mlp", "seed": 0, "grid": grid}
    with pytest.raises(ConfigValidationError):
        expand_grid(raw)


def test_duplicate_member_names():
    raw = {
        "task": "grid",
        "member_task": "train-mlp",
        "seed": 0,
        "grid": {"a": {"x-y": {}, "x": {}}, "b": {"z": {}, "y-z": {}}},
    }
    # x-y + z and x + y-z are both named x-y-z
    with pytest.raises(ConfigValidationError) as e:
        expand_grid(raw)
    assert "not unique" in e.value.findings[0]
