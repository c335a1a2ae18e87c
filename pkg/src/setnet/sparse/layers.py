"""
Sparse affine layer with activation and inverted dropout.

Only stored links take part in forward and backward, the weight gradient is returned per
link in link order (same order as SparseWeights.values).
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np
from attrs import define, field

from setnet.consts import ActivationKind
from setnet.errors import ShapeMismatchError
from setnet.sparse.activations import (
    ActivationSpec,
    SReLUParams,
    activation_derivative,
    apply_activation,
    softmax_backward,
    srelu_param_gradients,
)
from setnet.sparse.topology import SparseWeights
from setnet.typext import SeedOrRng, ensure_rng

# up to this many positions the weight gradient is a dense product followed by a gather
DENSE_GRADIENT_MAX_POSITIONS = 4_000_000
# elements per chunk (batch * links) for the gather kernel
GATHER_CHUNK_ELEMENTS = 1 << 22


@define
class SparseLayer:
    weights: SparseWeights
    bias: np.ndarray = field(converter=lambda b: np.asarray(b, dtype=np.float64))
    activation: ActivationSpec = field(factory=ActivationSpec)

    def __attrs_post_init__(self):
        if self.bias.shape != (self.weights.n_out,):
            raise ShapeMismatchError(
                f"bias has shape {self.bias.shape} but layer has {self.weights.n_out} outputs"
            )
        p = self.activation.srelu_params
        if p is not None and len(p) != self.weights.n_out:
            raise ShapeMismatchError(
                f"srelu has {len(p)} neurons but layer has {self.weights.n_out} outputs"
            )

    @property
    def n_in(self) -> int:
        return self.weights.n_in

    @property
    def n_out(self) -> int:
        return self.weights.n_out


@define
class LayerCache:
    x: np.ndarray
    z: np.ndarray
    a: np.ndarray
    output: np.ndarray
    mask: Optional[np.ndarray] = None
    dropout_rate: float = 0.0


@define
class LayerGradients:
    grad_input: np.ndarray
    grad_weights: np.ndarray
    grad_bias: np.ndarray
    grad_srelu: Optional[SReLUParams] = None


def dropout_mask(shape: Tuple[int, ...], rate: float, rng: np.random.Generator) -> np.ndarray:
    """Boolean keep-mask, each unit dropped independently with probability rate."""
    return rng.random(shape) >= rate


def preactivation(layer: SparseLayer, x: np.ndarray) -> np.ndarray:
    # W^T x^T keeps the sparse operand on the left, result is dense (n_out, batch)
    return np.ascontiguousarray((layer.weights.matrix.T @ x.T).T) + layer.bias


def forward(
    layer: SparseLayer,
    x: np.ndarray,
    dropout_rate: float = 0.0,
    training: bool = False,
    rng: SeedOrRng = None,
) -> Tuple[np.ndarray, LayerCache]:
    """
    Args:
        layer: the layer
        x: input batch (batch, n_in)
        dropout_rate: probability of zeroing an output unit in training mode
        training: dropout is only applied in training mode
        rng: generator for the dropout mask

    Returns:
        output (batch, n_out) and the cache needed by backward
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != layer.n_in:
        raise ShapeMismatchError(f"Input shape {x.shape} does not match n_in={layer.n_in}")
    if not 0 <= dropout_rate < 1:
        raise ValueError(f"dropout_rate must be in [0, 1) but is {dropout_rate!r}")
    z = preactivation(layer, x)
    a = apply_activation(layer.activation.kind, z, layer.activation.srelu_params)
    if training and dropout_rate > 0:
        mask = dropout_mask(a.shape, dropout_rate, ensure_rng(rng))
        output = a * mask / (1.0 - dropout_rate)
        return output, LayerCache(x, z, a, output, mask, dropout_rate)
    return a, LayerCache(x, z, a, a)


def sparse_link_gradient(
    x: np.ndarray,
    delta: np.ndarray,
    in_index: np.ndarray,
    out_index: np.ndarray,
    n_out: int,
) -> np.ndarray:
    """
    dL/dw for each link: sum over the batch of x[:, in] * delta[:, out].

    Small layers compute the dense product x^T delta and gather the links, large layers
    multiply gathered columns chunk by chunk so that memory stays bounded.
    """
    n_in = x.shape[1]
    if n_in * n_out <= DENSE_GRADIENT_MAX_POSITIONS:
        return (x.T @ delta)[in_index, out_index]
    nnz = in_index.shape[0]
    out = np.empty(nnz, dtype=np.float64)
    chunk = max(1, GATHER_CHUNK_ELEMENTS // max(1, x.shape[0]))
    for start in range(0, nnz, chunk):
        stop = min(nnz, start + chunk)
        out[start:stop] = np.einsum(
            "bi,bi->i", x[:, in_index[start:stop]], delta[:, out_index[start:stop]]
        )
    return out


def backward(
    layer: SparseLayer,
    cache: LayerCache,
    grad_output: np.ndarray,
    grad_is_preactivation: bool = False,
) -> LayerGradients:
    """
    Backpropagate through dropout, activation and the sparse affine map.

    Args:
        layer: the layer used in forward
        cache: the forward cache
        grad_output: dL/d(output) (batch, n_out)
        grad_is_preactivation: grad_output already is dL/dz, e.g. the combined
            softmax cross-entropy gradient (p - y) / batch

    Returns:
        gradients wrt input, per link weights, bias and srelu parameters
    """
    if grad_output.shape != cache.output.shape:
        raise ShapeMismatchError(
            f"grad_output shape {grad_output.shape} does not match the cached output "
            f"{cache.output.shape}"
        )
    if cache.x.shape[1] != layer.n_in or cache.z.shape[1] != layer.n_out:
        raise ShapeMismatchError("Cache does not belong to this layer")
    g = grad_output
    if cache.mask is not None:
        g = g * cache.mask / (1.0 - cache.dropout_rate)

    kind, p = layer.activation.kind, layer.activation.srelu_params
    grad_srelu = None
    if grad_is_preactivation:
        delta = g
    elif kind == ActivationKind.SOFTMAX:
        delta = softmax_backward(cache.a, g)
    else:
        delta = g * activation_derivative(kind, cache.z, p)
        if kind == ActivationKind.SRELU:
            grad_srelu = srelu_param_gradients(cache.z, g, p)

    w = layer.weights
    grad_weights = sparse_link_gradient(cache.x, delta, w.in_index, w.out_index, w.n_out)
    grad_input = np.ascontiguousarray((w.matrix @ delta.T).T)
    return LayerGradients(grad_input, grad_weights, delta.sum(axis=0), grad_srelu)
