"""
Multi-layer perceptrons made of sparse layers.

The three modes share one code path: set and fixprob layers start from the same
Erdos-Renyi topology (given the same generator), dense layers store every position as a
link. Only the trainer decides whether a topology evolves.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from attrs import define, field
from loguru import logger

from setnet.consts import ActivationKind, ModelMode
from setnet.errors import ShapeMismatchError
from setnet.sparse.activations import ActivationSpec
from setnet.sparse.layers import LayerCache, LayerGradients, SparseLayer, backward, forward
from setnet.sparse.topology import (
    EvolutionConfig,
    SparseWeights,
    WeightInitSpec,
    expected_connection_count,
    init_erdos_renyi,
)
from setnet.typext import SeedOrRng, ensure_rng


@define
class MlpModel:
    layers: List[SparseLayer]
    mode: str = field(default=ModelMode.SET)

    def __attrs_post_init__(self):
        ModelMode.check(self.mode, "model mode")
        if not self.layers:
            raise ValueError("An MLP needs at least one layer")
        for k in range(1, len(self.layers)):
            if self.layers[k].n_in != self.layers[k - 1].n_out:
                raise ShapeMismatchError(
                    f"Layer {k} has n_in={self.layers[k].n_in} but layer {k - 1} has "
                    f"n_out={self.layers[k - 1].n_out}"
                )
        if self.mode == ModelMode.DENSE:
            for k, layer in enumerate(self.layers):
                if layer.weights.nnz != layer.n_in * layer.n_out:
                    raise ShapeMismatchError(f"Dense model but layer {k} is not fully connected")

    @property
    def sizes(self) -> List[int]:
        return [self.layers[0].n_in] + [layer.n_out for layer in self.layers]

    @property
    def activations(self) -> List[str]:
        return [layer.activation.kind for layer in self.layers]

    @property
    def nnz_per_layer(self) -> List[int]:
        return [layer.weights.nnz for layer in self.layers]

    @property
    def n_weights(self) -> int:
        """Number of links, biases excluded."""
        return sum(self.nnz_per_layer)

    def forward(
        self,
        x: np.ndarray,
        training: bool = False,
        dropout_rate: float = 0.0,
        rng: SeedOrRng = None,
    ) -> Tuple[np.ndarray, List[LayerCache]]:
        """Dropout (training only) applies to the outputs of hidden layers."""
        caches = []
        out = x
        for k, layer in enumerate(self.layers):
            rate = dropout_rate if k < len(self.layers) - 1 else 0.0
            out, cache = forward(layer, out, dropout_rate=rate, training=training, rng=rng)
            caches.append(cache)
        return out, caches

    def backward(self, caches: List[LayerCache], grad_logits: np.ndarray) -> List[LayerGradients]:
        """Backpropagate dL/dz of the output layer, e.g. the cross-entropy gradient (p - y) / B."""
        grads: List[Optional[LayerGradients]] = [None] * len(self.layers)
        g = grad_logits
        for k in reversed(range(len(self.layers))):
            grads[k] = backward(
                self.layers[k], caches[k], g, grad_is_preactivation=k == len(self.layers) - 1
            )
            g = grads[k].grad_input
        return grads

    def predict_proba(self, x: np.ndarray, batch_size: int = 1000) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.layers[0].n_in:
            raise ShapeMismatchError(
                f"Input shape {x.shape} does not match n_in={self.layers[0].n_in}"
            )
        parts = [
            self.forward(x[start : start + batch_size])[0]
            for start in range(0, x.shape[0], batch_size)
        ]
        if not parts:
            return np.zeros((0, self.layers[-1].n_out))
        return np.concatenate(parts, axis=0)

    def predict(self, x: np.ndarray, batch_size: int = 1000) -> np.ndarray:
        return self.predict_proba(x, batch_size).argmax(axis=1)


def _layer_activations(activations: Union[str, Sequence[str]], n_layers: int) -> List[str]:
    if isinstance(activations, str):
        kinds = [activations] * (n_layers - 1) + [ActivationKind.SOFTMAX]
    else:
        kinds = list(activations)
    if len(kinds) != n_layers:
        raise ValueError(f"Got {len(kinds)} activations for {n_layers} layers")
    for kind in kinds:
        ActivationKind.check(kind, "activation")
    if kinds[-1] != ActivationKind.SOFTMAX:
        raise ValueError(f"The output activation must be softmax, got {kinds[-1]!r}")
    return kinds


def build_mlp(
    sizes: Sequence[int],
    activations: Union[str, Sequence[str]] = ActivationKind.RELU,
    mode: str = ModelMode.SET,
    evolution: Optional[EvolutionConfig] = None,
    init: Optional[WeightInitSpec] = None,
    rng: SeedOrRng = None,
) -> MlpModel:
    """
    Args:
        sizes: layer sizes including input and output, e.g. (784, 1000, 1000, 1000, 10)
        activations: one kind per layer, or a single hidden kind followed by softmax
        mode: set, fixprob or dense
        evolution: epsilon of the sparse layers
        init: weight distribution
        rng: generator for topology and weights, the same generator state gives set and
            fixprob models with identical layers
    """
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError(f"Architecture needs >= 2 positive sizes, got {sizes}")
    ModelMode.check(mode, "model mode")
    kinds = _layer_activations(activations, len(sizes) - 1)
    evolution = evolution or EvolutionConfig()
    init = init or WeightInitSpec()
    rng = ensure_rng(evolution.seed if rng is None else rng)

    layers = []
    for n_in, n_out, kind in zip(sizes[:-1], sizes[1:], kinds):
        if mode == ModelMode.DENSE:
            w = SparseWeights.fully_connected(
                init.sample(n_in * n_out, n_in, n_out, rng).reshape(n_in, n_out)
            )
        else:
            w = init_erdos_renyi(n_in, n_out, evolution, init, rng=rng)
        layers.append(SparseLayer(w, np.zeros(n_out), ActivationSpec.create(kind, n_out)))
    model = MlpModel(layers, mode)
    logger.info(
        f"Built {mode} MLP {'-'.join(map(str, sizes))} with {model.n_weights} weights "
        f"(per layer {model.nnz_per_layer})"
    )
    return model


@define
class WeightCount:
    """
    Args:
        realized: links actually stored
        expected: sum over layers of min(n_in * n_out, epsilon * (n_in + n_out))
        linear: sum over layers of epsilon * (n_in + n_out) without the saturation clamp
        dense: sum over layers of n_in * n_out
    """

    realized: int
    expected: float
    linear: float
    dense: int


def count_weights(model: MlpModel, epsilon: float) -> WeightCount:
    pairs = list(zip(model.sizes[:-1], model.sizes[1:]))
    return WeightCount(
        realized=model.n_weights,
        expected=sum(expected_connection_count(a, b, epsilon) for a, b in pairs),
        linear=float(sum(epsilon * (a + b) for a, b in pairs)),
        dense=sum(a * b for a, b in pairs),
    )
