"""
SGD with momentum on the sparse support.

Per link, with g the loss gradient:
    g' = g + l2 * w + l1 * sign(w)
    v <- mu * v - lr * g'
    w <- w + v                    (classic)
    w <- w + mu * v - lr * g'     (nesterov, v already updated)
Biases and SReLU parameters use the same update without the decay terms.
"""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np
from attrs import define

from setnet.consts import RegularizerKind
from setnet.errors import ShapeMismatchError
from setnet.mlp.config import TrainConfig
from setnet.mlp.model import MlpModel
from setnet.sparse.activations import SRELU_PARAM_NAMES, SReLUParams
from setnet.sparse.layers import LayerGradients
from setnet.sparse.losses import regularizer_gradient
from setnet.sparse.topology import EvolutionDelta, SparseWeights, realign_link_values


@define
class LayerVelocity:
    weights: np.ndarray
    bias: np.ndarray
    srelu: Optional[SReLUParams] = None


@define
class VelocityState:
    layers: List[LayerVelocity]

    @classmethod
    def zeros(cls, model: MlpModel) -> VelocityState:
        return cls(
            [
                LayerVelocity(
                    np.zeros(layer.weights.nnz),
                    np.zeros(layer.n_out),
                    None
                    if layer.activation.srelu_params is None
                    else SReLUParams.zeros_like(layer.activation.srelu_params),
                )
                for layer in model.layers
            ]
        )


def _momentum_update(
    param: np.ndarray,
    grad: np.ndarray,
    velocity: np.ndarray,
    learning_rate: float,
    momentum: float,
    nesterov: bool,
) -> None:
    velocity *= momentum
    velocity -= learning_rate * grad
    if nesterov:
        param += momentum * velocity - learning_rate * grad
    else:
        param += velocity


def sgd_step(
    model: MlpModel,
    gradients: Sequence[LayerGradients],
    velocity: VelocityState,
    config: TrainConfig,
) -> None:
    """
    Update all parameters of the model in place.

    Raises:
        ShapeMismatchError: a gradient or velocity does not cover the current link set
    """
    if len(gradients) != len(model.layers) or len(velocity.layers) != len(model.layers):
        raise ShapeMismatchError(
            f"{len(gradients)} gradients and {len(velocity.layers)} velocities for "
            f"{len(model.layers)} layers"
        )
    lr, mu, nesterov = config.learning_rate, config.momentum, config.nesterov
    for k, (layer, grad, vel) in enumerate(zip(model.layers, gradients, velocity.layers)):
        nnz = layer.weights.nnz
        if grad.grad_weights.shape != (nnz,) or vel.weights.shape != (nnz,):
            raise ShapeMismatchError(
                f"Layer {k}: gradient {grad.grad_weights.shape} / velocity {vel.weights.shape} "
                f"do not match the {nnz} links"
            )
        w = layer.weights.values
        g = grad.grad_weights
        if config.weight_decay_l2 > 0:
            g = g + regularizer_gradient(RegularizerKind.L2, config.weight_decay_l2, w)
        if config.l1_rate > 0:
            g = g + regularizer_gradient(RegularizerKind.L1, config.l1_rate, w)
        _momentum_update(w, g, vel.weights, lr, mu, nesterov)
        _momentum_update(layer.bias, grad.grad_bias, vel.bias, lr, mu, nesterov)
        params = layer.activation.srelu_params
        if params is not None and grad.grad_srelu is not None:
            for name in SRELU_PARAM_NAMES:
                _momentum_update(
                    getattr(params, name),
                    getattr(grad.grad_srelu, name),
                    getattr(vel.srelu, name),
                    lr,
                    mu,
                    nesterov,
                )


def realign_velocity(
    velocity: np.ndarray,
    old_positions: np.ndarray,
    weights: SparseWeights,
    delta: EvolutionDelta,
    carry_over: bool = False,
) -> np.ndarray:
    """
    Velocity of the links after an evolution step.

    Surviving links keep theirs. Added links start at zero, or with carry_over take the
    velocities of the removed links in removal order.
    """
    new_positions = weights.flat_positions
    out = realign_link_values(velocity, old_positions, new_positions, fill=0.0)
    if carry_over and delta.n_added > 0:
        removed_pos = delta.removed_in * weights.n_out + delta.removed_out
        removed_vel = velocity[np.searchsorted(old_positions, removed_pos)]
        added_pos = delta.added_in * weights.n_out + delta.added_out
        out[np.searchsorted(new_positions, added_pos)] = removed_vel[: delta.n_added]
    return out
