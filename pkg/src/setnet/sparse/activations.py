"""
Elementwise activations and their derivatives.

Derivatives at kinks are the left derivative: relu'(0) = 0, srelu'(t_left) = a_left,
srelu'(t_right) = 1.
"""

from __future__ import annotations

from typing import Any, Mapping, Optional

import numpy as np
from attrs import define, field
from scipy.special import expit, softmax

from setnet.consts import ActivationKind
from setnet.errors import ShapeMismatchError

SRELU_PARAM_NAMES = ("t_left", "a_left", "t_right", "a_right")


@define
class SReLUParams:
    """Per-neuron S-shaped rectifier parameters, one array of length n_out each."""

    t_left: np.ndarray
    a_left: np.ndarray
    t_right: np.ndarray
    a_right: np.ndarray

    @classmethod
    def default(cls, n: int) -> SReLUParams:
        """t_left=0, a_left=0, t_right=1, a_right=1: equals relu at init."""
        return cls(np.zeros(n), np.zeros(n), np.ones(n), np.ones(n))

    @classmethod
    def zeros_like(cls, other: SReLUParams) -> SReLUParams:
        return cls(*(np.zeros_like(getattr(other, k)) for k in SRELU_PARAM_NAMES))

    def __len__(self) -> int:
        return self.t_left.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in SRELU_PARAM_NAMES}

    def copy(self) -> SReLUParams:
        return SReLUParams(*(getattr(self, k).copy() for k in SRELU_PARAM_NAMES))


@define
class ActivationSpec:
    kind: str = field(default=ActivationKind.RELU)
    srelu_params: Optional[SReLUParams] = field(default=None)

    @kind.validator
    def _check_kind(self, _attribute, value):
        ActivationKind.check(value, "activation")

    @srelu_params.validator
    def _check_srelu(self, _attribute, value):
        if (value is not None) != (self.kind == ActivationKind.SRELU):
            raise ValueError(
                f"srelu_params must be given exactly when kind is srelu, got kind={self.kind}"
            )

    @classmethod
    def create(cls, kind: str, n_out: int) -> ActivationSpec:
        params = SReLUParams.default(n_out) if kind == ActivationKind.SRELU else None
        return cls(kind, params)

    def to_dict(self) -> Mapping[str, Any]:
        return {"kind": self.kind}


def _srelu_regions(z: np.ndarray, p: SReLUParams):
    # right region uses z > t_right so that the derivative is the left derivative at t_right
    left = z <= p.t_left
    right = (z > p.t_right) & ~left
    return left, right


def srelu(z: np.ndarray, p: SReLUParams) -> np.ndarray:
    out = z.copy()
    left, right = _srelu_regions(z, p)
    t_l = np.broadcast_to(p.t_left, z.shape)
    a_l = np.broadcast_to(p.a_left, z.shape)
    t_r = np.broadcast_to(p.t_right, z.shape)
    a_r = np.broadcast_to(p.a_right, z.shape)
    out[left] = t_l[left] + a_l[left] * (z[left] - t_l[left])
    out[right] = t_r[right] + a_r[right] * (z[right] - t_r[right])
    return out


def apply_activation(kind: str, z: np.ndarray, srelu_params: Optional[SReLUParams] = None):
    if kind == ActivationKind.RELU:
        return np.maximum(z, 0.0)
    if kind == ActivationKind.SRELU:
        if srelu_params is None:
            raise ValueError("srelu needs srelu_params")
        _check_param_len(z, srelu_params)
        return srelu(z, srelu_params)
    if kind == ActivationKind.SIGMOID:
        return expit(z)
    if kind == ActivationKind.SOFTMAX:
        return softmax(z, axis=-1)
    if kind == ActivationKind.IDENTITY:
        return z.copy()
    raise ValueError(f"Unknown activation {kind!r}")


def activation_derivative(
    kind: str, z: np.ndarray, srelu_params: Optional[SReLUParams] = None
) -> np.ndarray:
    """
    Elementwise derivative of the activation at z.

    For softmax this is the diagonal of the row Jacobian, backward passes use softmax_backward.
    """
    if kind == ActivationKind.RELU:
        return (z > 0).astype(np.float64)
    if kind == ActivationKind.SRELU:
        if srelu_params is None:
            raise ValueError("srelu needs srelu_params")
        _check_param_len(z, srelu_params)
        left, right = _srelu_regions(z, srelu_params)
        out = np.ones_like(z, dtype=np.float64)
        out[left] = np.broadcast_to(srelu_params.a_left, z.shape)[left]
        out[right] = np.broadcast_to(srelu_params.a_right, z.shape)[right]
        return out
    if kind == ActivationKind.SIGMOID:
        s = expit(z)
        return s * (1.0 - s)
    if kind == ActivationKind.SOFTMAX:
        s = softmax(z, axis=-1)
        return s * (1.0 - s)
    if kind == ActivationKind.IDENTITY:
        return np.ones_like(z, dtype=np.float64)
    raise ValueError(f"Unknown activation {kind!r}")


def softmax_backward(s: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
    """Jacobian-vector product of row softmax given its output s."""
    return s * (grad_output - np.sum(grad_output * s, axis=-1, keepdims=True))


def srelu_param_gradients(
    z: np.ndarray, grad_output: np.ndarray, p: SReLUParams
) -> SReLUParams:
    """Gradients of sum(grad_output * srelu(z)) wrt the four parameter vectors."""
    left, right = _srelu_regions(z, p)
    t_l = np.broadcast_to(p.t_left, z.shape)
    t_r = np.broadcast_to(p.t_right, z.shape)
    g_left = np.where(left, grad_output, 0.0)
    g_right = np.where(right, grad_output, 0.0)
    return SReLUParams(
        t_left=np.sum(g_left * (1.0 - p.a_left), axis=0),
        a_left=np.sum(g_left * np.where(left, z - t_l, 0.0), axis=0),
        t_right=np.sum(g_right * (1.0 - p.a_right), axis=0),
        a_right=np.sum(g_right * np.where(right, z - t_r, 0.0), axis=0),
    )


def _check_param_len(z: np.ndarray, p: SReLUParams):
    if len(p) != z.shape[-1]:
        raise ShapeMismatchError(f"srelu has {len(p)} neurons but input has {z.shape[-1]}")
