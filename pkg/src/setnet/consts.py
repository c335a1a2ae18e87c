"""
String constants used across setnet.

Const classes hold constants and behave like a read-only dict at class level, which avoids
the `MyEnum.field.value` dance of enum.Enum while still allowing membership checks:

    >>> ActivationKind.RELU
    'relu'
    >>> "srelu" in ActivationKind.values_list()
    True
"""

from __future__ import annotations

import inspect
from abc import ABCMeta
from typing import Any, Dict, ItemsView, KeysView, List, Optional, Tuple, Union, ValuesView


class _ConstMeta(ABCMeta):
    """Delegates str, repr, iter and len on the class object to the class-level dict."""

    def __str__(cls):
        return f"{cls.__name__}({', '.join(f'{k}={v!r}' for k, v in cls.items())})"

    def __repr__(cls):
        return str(cls)

    def __iter__(cls):
        return iter(cls.keys())

    def __len__(cls):
        return len(cls.keys())

    def __contains__(cls, item):
        return item in cls.keys()


class Const(metaclass=_ConstMeta):
    """Class to hold constants. Cannot be instanced. Subclasses inherit the parent's fields."""

    _dict: Dict[str, Dict[str, Any]] = {"Const": {}}

    @classmethod
    def _get_dict(cls) -> Dict[str, Any]:
        return cls._dict[cls.__name__]

    @classmethod
    def keys(cls) -> KeysView[str]:
        return cls._get_dict().keys()

    @classmethod
    def values(cls) -> ValuesView[Any]:
        return cls._get_dict().values()

    @classmethod
    def items(cls) -> ItemsView[str, Any]:
        return cls._get_dict().items()

    @classmethod
    def values_list(cls) -> List[Any]:
        return list(cls.values())

    @classmethod
    def get(cls, item: str, default: Any = None) -> Any:
        return cls._get_dict().get(item, default)

    @classmethod
    def check(cls, value: Any, what: str = "value") -> Any:
        """Return value if it is one of the constants, raise ValueError otherwise."""
        if value not in cls.values_list():
            raise ValueError(f"Unknown {what} {value!r}, must be one of {cls.values_list()}")
        return value

    def __init_subclass__(
        cls, allowed_types: Optional[Union[type, Tuple[type, ...]]] = None
    ) -> None:
        cls._dict[cls.__name__] = {}
        for parent_cls in cls.__bases__:
            cls._dict[cls.__name__].update(cls._dict.get(parent_cls.__name__, {}))
        for key in cls.__dict__.keys():
            if key[0] == "_":
                continue
            value = getattr(cls, key)
            if inspect.ismethod(value) and value.__self__ is cls:
                continue
            if allowed_types is not None and not isinstance(value, allowed_types):
                raise TypeError(
                    f"Constant: {key} in class: {cls.__name__} must be of type {allowed_types}"
                )
            cls._dict[cls.__name__][key] = value

    def __init__(self) -> None:
        raise RuntimeError(f"Do not instance this class, it's a Const: {type(self).__name__}")


class ActivationKind(Const, allowed_types=str):
    RELU = "relu"
    SRELU = "srelu"
    SIGMOID = "sigmoid"
    SOFTMAX = "softmax"
    IDENTITY = "identity"


class ModelMode(Const, allowed_types=str):
    """set: evolving sparse, fixprob: frozen ER sparse, dense: fully connected."""

    SET = "set"
    FIXPROB = "fixprob"
    DENSE = "dense"


class RegularizerKind(Const, allowed_types=str):
    NONE = "none"
    L1 = "l1"
    L2 = "l2"


class InitKind(Const, allowed_types=str):
    UNIFORM = "uniform"
    NORMAL = "normal"
    HE_UNIFORM = "he_uniform"
    XAVIER = "xavier"


class Side(Const, allowed_types=str):
    INPUT = "input"
    OUTPUT = "output"


class FeatureKind(Const, allowed_types=str):
    BINARY = "binary"
    GRAYSCALE01 = "grayscale01"
    REAL = "real"
    RGB01 = "rgb01"


class SyntheticKind(Const, allowed_types=str):
    PROTOTYPE_MIXTURE = "prototype-mixture"
    TWO_MOONS_LIKE = "two-moons-like"
    LINEARLY_SEPARABLE = "linearly-separable"


class DatasetFormat(Const, allowed_types=str):
    IDX = "idx"
    CIFAR10 = "cifar10"
    CSV = "csv"
    SPARSE_BINARY = "sparse-binary"
    SYNTHETIC = "synthetic"


class Task(Const, allowed_types=str):
    TRAIN_MLP = "train-mlp"
    TRAIN_RBM = "train-rbm"
    EVAL_AIS = "eval-ais"
    ANALYZE_TOPOLOGY = "analyze-topology"
    GRID = "grid"


class FitMethod(Const, allowed_types=str):
    DISCRETE = "discrete"
    APPROXIMATE = "approximate"


class RbmUnits(Const, allowed_types=str):
    VISIBLE = "visible"
    HIDDEN = "hidden"


class LogZMethod(Const, allowed_types=str):
    AUTO = "auto"
    EXACT = "exact"
    AIS = "ais"


class ExitCode(Const, allowed_types=int):
    SUCCESS = 0
    RUNTIME_FAILURE = 1
    VALIDATION_FAILURE = 2
