"""Validators and constructors shared by the attrs config classes."""

from __future__ import annotations

from typing import Any, Mapping, Type, TypeVar

import attrs

from setnet.errors import ConfigValidationError

T = TypeVar("T")


def from_dict_strict(cls: Type[T], dct: Mapping[str, Any], what: str) -> T:
    """Build an attrs class from a mapping, listing unknown keys and invalid values as findings."""
    known = {a.name for a in attrs.fields(cls) if a.init}
    unknown = sorted(set(dct.keys()) - known)
    if unknown:
        raise ConfigValidationError([f"{what}: unknown key(s) {unknown}, allowed: {sorted(known)}"])
    try:
        return cls(**dct)
    except ConfigValidationError as e:
        raise ConfigValidationError([f"{what}.{f}" for f in e.findings]) from e
    except (TypeError, ValueError) as e:
        raise ConfigValidationError([f"{what}: {e}"]) from e


def non_negative(_instance, attribute, value):
    if value < 0:
        raise ValueError(f"{attribute.name} must be >= 0 but is {value!r}")


def positive(_instance, attribute, value):
    if not value > 0:
        raise ValueError(f"{attribute.name} must be > 0 but is {value!r}")


def rate_below_one(_instance, attribute, value):
    if not 0 <= value < 1:
        raise ValueError(f"{attribute.name} must be in [0, 1) but is {value!r}")


def int_at_least(minimum: int):
    def _check(_instance, attribute, value):
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            raise ValueError(f"{attribute.name} must be an integer >= {minimum} but is {value!r}")

    return _check
