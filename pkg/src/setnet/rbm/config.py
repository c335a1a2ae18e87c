from __future__ import annotations

from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import attrs
import numpy as np
from attrs import define, field

from setnet.attrsext import from_dict_strict, int_at_least, non_negative, positive, rate_below_one
from setnet.consts import LogZMethod
from setnet.sparse.topology import EvolutionConfig, WeightInitSpec


def _to_evolution(value: Any) -> EvolutionConfig:
    return EvolutionConfig.from_dict(value) if isinstance(value, Mapping) else value


def _to_init(value: Any) -> WeightInitSpec:
    return WeightInitSpec.from_dict(value) if isinstance(value, Mapping) else value


def _to_ais(value: Any) -> AisConfig:
    return AisConfig.from_dict(value) if isinstance(value, Mapping) else value


def _to_optional_array(value: Any) -> Optional[np.ndarray]:
    return None if value is None else np.asarray(value, dtype=np.float64).ravel()


def _to_schedule(value: Any) -> Optional[Tuple[Tuple[float, int], ...]]:
    if value is None:
        return None
    return tuple((float(end), int(n)) for end, n in value)


def piecewise_betas(schedule: Sequence[Tuple[float, int]]) -> np.ndarray:
    """
    Concatenated linear pieces, e.g. [(0.5, 500), (0.9, 4000), (1.0, 10000)] gives 500 steps
    up to 0.5, 4000 up to 0.9 and 10000 up to 1, starting at 0.
    """
    pieces, start = [np.zeros(1)], 0.0
    for end, n in schedule:
        pieces.append(np.linspace(start, end, n + 1)[1:])
        start = end
    return np.concatenate(pieces)


@define
class AisConfig:
    """
    Args:
        num_betas: number of inverse temperatures including 0 and 1, uniformly spaced
        num_chains: independent annealing runs
        base_rate_biases: visible biases of the base-rate model, zeros if None
        schedule: optional (end, steps) pieces replacing the uniform spacing
        seed: seed used when no generator is passed
    """

    num_betas: int = field(default=1000, validator=int_at_least(2))
    num_chains: int = field(default=100, validator=int_at_least(1))
    base_rate_biases: Optional[np.ndarray] = field(
        default=None, converter=_to_optional_array, eq=False
    )
    schedule: Optional[Tuple[Tuple[float, int], ...]] = field(
        default=None, converter=_to_schedule
    )
    seed: Optional[int] = None

    @schedule.validator
    def _check_schedule(self, _attribute, value):
        if value is None:
            return
        ends = [end for end, _ in value]
        if not value or ends[-1] != 1.0 or any(n < 1 for _, n in value):
            raise ValueError(f"schedule must end at 1.0 with positive step counts: {value}")
        if any(b <= a for a, b in zip([0.0] + ends, ends)):
            raise ValueError(f"schedule ends must be strictly increasing in (0, 1]: {value}")

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> AisConfig:
        return from_dict_strict(cls, dct, "ais")

    def betas(self) -> np.ndarray:
        if self.schedule is not None:
            return piecewise_betas(self.schedule)
        return np.linspace(0.0, 1.0, self.num_betas)

    def to_dict(self) -> Dict[str, Any]:
        dct = attrs.asdict(self)
        if self.base_rate_biases is not None:
            dct["base_rate_biases"] = self.base_rate_biases.tolist()
        if self.schedule is not None:
            dct["schedule"] = [list(s) for s in self.schedule]
        return dct


@define
class RbmTrainConfig:
    """
    Contrastive divergence and evolution settings of one SET-RBM run.

    Args:
        cd_steps: Gibbs steps k of CD-k
        learning_rate: step size of the likelihood ascent
        momentum: momentum coefficient
        weight_decay: L2 rate on the weights (biases are not decayed)
        epochs: number of training epochs
        batch_size: minibatch size
        evolution: epsilon and zeta of the visible-hidden topology
        init: distribution of initial and regrown weights
        eval_every: log-probability evaluation every this many epochs, 0 = first and last only
        log_z_method: auto uses exact enumeration when possible and AIS otherwise
        ais: annealing settings for the AIS evaluations
        snapshot_every: write topology snapshots every this many epochs, 0 = never
        seed: root seed, init, sampling, evolution and AIS get independent streams
    """

    cd_steps: int = field(default=1, validator=int_at_least(1))
    learning_rate: float = field(default=0.01, converter=float, validator=positive)
    momentum: float = field(default=0.9, converter=float, validator=rate_below_one)
    weight_decay: float = field(default=0.0002, converter=float, validator=non_negative)
    epochs: int = field(default=5000, validator=int_at_least(1))
    batch_size: int = field(default=100, validator=int_at_least(1))
    evolution: EvolutionConfig = field(
        factory=lambda: EvolutionConfig(epsilon=11, zeta=0.3), converter=_to_evolution
    )
    init: WeightInitSpec = field(factory=WeightInitSpec, converter=_to_init)
    eval_every: int = field(default=50, validator=int_at_least(0))
    log_z_method: str = field(default=LogZMethod.AUTO)
    ais: AisConfig = field(factory=AisConfig, converter=_to_ais)
    snapshot_every: int = field(default=0, validator=int_at_least(0))
    seed: Optional[int] = 0

    @log_z_method.validator
    def _check_log_z_method(self, _attribute, value):
        LogZMethod.check(value, "log_z_method")

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> RbmTrainConfig:
        return from_dict_strict(cls, dct, "train")

    def to_dict(self) -> Dict[str, Any]:
        dct: Dict[str, Any] = attrs.asdict(self, recurse=True)
        dct["ais"] = self.ais.to_dict()
        return dct

    def eval_epochs(self) -> List[int]:
        every = self.eval_every
        epochs = {0, self.epochs}
        if every > 0:
            epochs.update(range(every, self.epochs + 1, every))
        return sorted(epochs)
