"""
Binary restricted Boltzmann machine on a sparse visible-hidden topology.

    E(v, h) = -a.v - b.h - sum over links (i, j) of w_ij v_i h_j
    P(h_j = 1 | v) = sigmoid(b_j + sum_i w_ij v_i)
    P(v_i = 1 | h) = sigmoid(a_i + sum_j w_ij h_j)
    F(v) = -a.v - sum_j softplus(b_j + sum_i w_ij v_i)

The weights are a SparseWeights with n_in = visible units and n_out = hidden units.
"""

from __future__ import annotations

from typing import Iterator, Optional, Tuple, Union

import numpy as np
from attrs import define, field
from loguru import logger
from scipy.special import expit, logsumexp

from setnet.consts import ModelMode, RbmUnits
from setnet.data.dataset import Dataset
from setnet.errors import ModelTooLargeError, ShapeMismatchError
from setnet.sparse.topology import (
    EvolutionConfig,
    SparseWeights,
    WeightInitSpec,
    init_erdos_renyi,
)
from setnet.typext import SeedOrRng, ensure_rng

# exact enumeration runs over 2^n states of the smaller side
EXACT_MAX_UNITS = 20
# states per enumeration block
ENUMERATION_BLOCK_BITS = 14

ArrayOrDataset = Union[np.ndarray, Dataset]


def _as_vector(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).ravel()


@define
class RbmModel:
    weights: SparseWeights
    visible_bias: np.ndarray = field(converter=_as_vector)
    hidden_bias: np.ndarray = field(converter=_as_vector)
    mode: str = ModelMode.SET

    def __attrs_post_init__(self):
        ModelMode.check(self.mode, "RBM mode")
        if self.visible_bias.shape != (self.weights.n_in,):
            raise ShapeMismatchError(
                f"visible_bias has {self.visible_bias.size} entries for {self.weights.n_in} "
                f"visible units"
            )
        if self.hidden_bias.shape != (self.weights.n_out,):
            raise ShapeMismatchError(
                f"hidden_bias has {self.hidden_bias.size} entries for {self.weights.n_out} "
                f"hidden units"
            )
        if self.mode == ModelMode.DENSE and self.weights.nnz != self.n_visible * self.n_hidden:
            raise ShapeMismatchError("A dense RBM must be fully connected")

    @property
    def n_visible(self) -> int:
        return self.weights.n_in

    @property
    def n_hidden(self) -> int:
        return self.weights.n_out

    def copy(self) -> RbmModel:
        return RbmModel(
            self.weights.copy(), self.visible_bias.copy(), self.hidden_bias.copy(), self.mode
        )


def build_rbm(
    n_visible: int,
    n_hidden: int,
    mode: str = ModelMode.SET,
    evolution: Optional[EvolutionConfig] = None,
    init: Optional[WeightInitSpec] = None,
    rng: SeedOrRng = None,
    visible_bias: Optional[np.ndarray] = None,
) -> RbmModel:
    """
    Erdos-Renyi topology for set and fixprob, all n_visible * n_hidden links for dense.
    Hidden biases start at zero, visible biases at zero unless given (e.g. base rates).
    """
    ModelMode.check(mode, "RBM mode")
    evolution = EvolutionConfig(epsilon=11) if evolution is None else evolution
    init = WeightInitSpec() if init is None else init
    rng = ensure_rng(rng)
    if mode == ModelMode.DENSE:
        values = init.sample(n_visible * n_hidden, n_visible, n_hidden, rng)
        weights = SparseWeights.fully_connected(values.reshape(n_visible, n_hidden))
    else:
        weights = init_erdos_renyi(n_visible, n_hidden, evolution, init, rng)
    if visible_bias is None:
        visible_bias = np.zeros(n_visible)
    return RbmModel(weights, visible_bias, np.zeros(n_hidden), mode)


def _as_batch(x: ArrayOrDataset, n: int, what: str) -> Tuple[np.ndarray, bool]:
    if isinstance(x, Dataset):
        x = x.features
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != n:
        raise ShapeMismatchError(f"{what} of shape {x.shape} does not match {n} units")
    return x, single


def hidden_input(rbm: RbmModel, v: np.ndarray) -> np.ndarray:
    """b + v W for a (batch, n_visible) array."""
    return np.ascontiguousarray((rbm.weights.matrix.T @ v.T).T) + rbm.hidden_bias


def visible_input(rbm: RbmModel, h: np.ndarray) -> np.ndarray:
    """a + h W^T for a (batch, n_hidden) array."""
    return np.ascontiguousarray((rbm.weights.matrix @ h.T).T) + rbm.visible_bias


def bernoulli(probabilities: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(probabilities.shape) < probabilities).astype(np.float64)


def sample_hidden(
    rbm: RbmModel, v: np.ndarray, rng: SeedOrRng = None
) -> Tuple[np.ndarray, np.ndarray]:
    """P(h|v) and a Bernoulli sample of it, for one visible vector or a batch."""
    v, single = _as_batch(v, rbm.n_visible, "visible input")
    probs = expit(hidden_input(rbm, v))
    samples = bernoulli(probs, ensure_rng(rng))
    return (probs[0], samples[0]) if single else (probs, samples)


def sample_visible(
    rbm: RbmModel, h: np.ndarray, rng: SeedOrRng = None
) -> Tuple[np.ndarray, np.ndarray]:
    """P(v|h) and a Bernoulli sample of it, for one hidden vector or a batch."""
    h, single = _as_batch(h, rbm.n_hidden, "hidden input")
    probs = expit(visible_input(rbm, h))
    samples = bernoulli(probs, ensure_rng(rng))
    return (probs[0], samples[0]) if single else (probs, samples)


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def free_energy(rbm: RbmModel, v: ArrayOrDataset) -> Union[float, np.ndarray]:
    """F(v), a float for one vector and an array for a batch."""
    v, single = _as_batch(v, rbm.n_visible, "visible input")
    energy = -(v @ rbm.visible_bias) - softplus(hidden_input(rbm, v)).sum(axis=1)
    return float(energy[0]) if single else energy


def _hidden_free_energy(rbm: RbmModel, h: np.ndarray) -> np.ndarray:
    """Free energy with the visible units summed out."""
    return -(h @ rbm.hidden_bias) - softplus(visible_input(rbm, h)).sum(axis=1)


def enumerate_states(n: int, block_bits: int = ENUMERATION_BLOCK_BITS) -> Iterator[np.ndarray]:
    """All 2^n binary vectors in blocks, most significant unit first."""
    block = 1 << min(n, block_bits)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, 1 << n, block):
        codes = np.arange(start, start + block, dtype=np.int64)
        yield ((codes[:, None] >> shifts) & 1).astype(np.float64)


def exact_log_z(rbm: RbmModel, over: Optional[str] = None) -> float:
    """
    log Z by enumerating the 2^n states of one side with the other side summed out.

    Args:
        rbm: the model
        over: visible or hidden, defaults to the smaller side

    Raises:
        ModelTooLargeError: the enumerated side has more than EXACT_MAX_UNITS units
    """
    if over is None:
        over = RbmUnits.VISIBLE if rbm.n_visible <= rbm.n_hidden else RbmUnits.HIDDEN
    RbmUnits.check(over, "enumerated side")
    n = rbm.n_visible if over == RbmUnits.VISIBLE else rbm.n_hidden
    if n > EXACT_MAX_UNITS:
        raise ModelTooLargeError(
            f"Exact log Z enumerates 2^{n} {over} states, at most {EXACT_MAX_UNITS} units are "
            f"supported ({rbm.n_visible}x{rbm.n_hidden} model)"
        )
    energy_fn = free_energy if over == RbmUnits.VISIBLE else _hidden_free_energy
    block_log_z = [logsumexp(-energy_fn(rbm, states)) for states in enumerate_states(n)]
    return float(logsumexp(block_log_z))


def test_log_prob(rbm: RbmModel, data: ArrayOrDataset, log_z: float) -> float:
    """Mean log P(v) in nats over the rows of data."""
    return float(np.mean(-free_energy(rbm, _as_batch(data, rbm.n_visible, "data")[0])) - log_z)


# not a test, pytest would collect it wherever it is imported into a test module
test_log_prob.__test__ = False


def reconstruction_error(
    rbm: RbmModel, data: ArrayOrDataset, rng: SeedOrRng = None
) -> float:
    """
    Mean over rows of the squared distance between v and P(v|h), h sampled from P(h|v).
    """
    v, _ = _as_batch(data, rbm.n_visible, "data")
    _, h = sample_hidden(rbm, v, rng)
    recon = expit(visible_input(rbm, h))
    return float(np.mean(np.sum((v - recon) ** 2, axis=1)))


def base_rate_biases(data: ArrayOrDataset, smoothing: float = 1.0) -> np.ndarray:
    """
    Visible biases log(p / (1 - p)) of the independent model matching the data marginals,
    with p = (count + smoothing) / (n + 2 * smoothing).
    """
    if isinstance(data, Dataset):
        data = data.features
    data = np.asarray(data, dtype=np.float64)
    if smoothing <= 0:
        raise ValueError(f"smoothing must be > 0 but is {smoothing}")
    p = (data.sum(axis=0) + smoothing) / (data.shape[0] + 2 * smoothing)
    logger.debug(f"Base rates in [{p.min():.4f}, {p.max():.4f}] from {data.shape[0]} rows")
    return np.log(p) - np.log1p(-p)
