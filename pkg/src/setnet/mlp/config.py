from __future__ import annotations

from typing import Any, Dict, Mapping, Optional

import attrs
from attrs import define, field

from setnet.attrsext import from_dict_strict, int_at_least, non_negative, positive, rate_below_one
from setnet.sparse.topology import EvolutionConfig, WeightInitSpec


def _to_evolution(value: Any) -> EvolutionConfig:
    return EvolutionConfig.from_dict(value) if isinstance(value, Mapping) else value


def _to_init(value: Any) -> WeightInitSpec:
    return WeightInitSpec.from_dict(value) if isinstance(value, Mapping) else value


@define
class TrainConfig:
    """
    SGD and evolution settings of one SET-MLP run.

    Args:
        learning_rate: fixed SGD step size
        momentum: momentum coefficient mu
        nesterov: use the Nesterov variant of the momentum update
        weight_decay_l2: L2 rate added to the weight gradient (not to biases)
        l1_rate: L1 rate added to the weight gradient
        dropout_rate: inverted dropout on hidden layer outputs
        input_dropout_rate: inverted dropout on the input features
        epochs: number of training epochs
        batch_size: minibatch size, the last batch of an epoch may be smaller
        evolution: epsilon and zeta of the sparse layers
        init: distribution of initial and regrown weights
        velocity_carry_over: regrown links take over the velocities of the removed links in
            removal order instead of starting from zero
        pvalue_every: compute the per-layer power-law p-value every this many epochs, 0 = never
        pvalue_monte_carlo: Monte-Carlo resamples per p-value
        snapshot_every: write topology snapshots every this many epochs, 0 = never
        augment_flip: random horizontal flips of image inputs during training
        seed: root seed of the run, init, shuffling and evolution get independent streams
    """

    learning_rate: float = field(default=0.01, converter=float, validator=positive)
    momentum: float = field(default=0.9, converter=float, validator=rate_below_one)
    nesterov: bool = False
    weight_decay_l2: float = field(default=0.0002, converter=float, validator=non_negative)
    l1_rate: float = field(default=0.0, converter=float, validator=non_negative)
    dropout_rate: float = field(default=0.3, converter=float, validator=rate_below_one)
    input_dropout_rate: float = field(default=0.0, converter=float, validator=rate_below_one)
    epochs: int = field(default=100, validator=int_at_least(1))
    batch_size: int = field(default=100, validator=int_at_least(1))
    evolution: EvolutionConfig = field(factory=EvolutionConfig, converter=_to_evolution)
    init: WeightInitSpec = field(factory=WeightInitSpec, converter=_to_init)
    velocity_carry_over: bool = False
    pvalue_every: int = field(default=0, validator=int_at_least(0))
    pvalue_monte_carlo: int = field(default=1000, validator=int_at_least(100))
    snapshot_every: int = field(default=0, validator=int_at_least(0))
    augment_flip: bool = False
    seed: Optional[int] = 0

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> TrainConfig:
        return from_dict_strict(cls, dct, "train")

    def to_dict(self) -> Dict[str, Any]:
        return attrs.asdict(self)
