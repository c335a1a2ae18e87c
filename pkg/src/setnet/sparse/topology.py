"""
Sparse bipartite topology of one layer and its evolution.

A SparseWeights wraps a CSR matrix of shape (n_in, n_out) whose stored entries are the links.
Links are always kept in row-major order of (in_index, out_index) with unique positions, so
the i-th link of `values`, `in_index`, `out_index` and `flat_positions` all refer to the same
connection. Explicit zeros are links, they are never dropped from the structure.

Usage:
    >>> cfg = EvolutionConfig(epsilon=20, zeta=0.3, seed=0)
    >>> w = init_erdos_renyi(784, 1000, cfg, WeightInitSpec())
    >>> delta = evolve(w, cfg, WeightInitSpec(), rng=np.random.default_rng(1))
"""

from __future__ import annotations

from typing import Any, Dict, List, Mapping, Optional, Tuple

import attrs
import numpy as np
import scipy.sparse as sp
from attrs import define, field
from loguru import logger

from setnet.attrsext import from_dict_strict
from setnet.consts import InitKind, Side
from setnet.errors import TopologyError
from setnet.typext import SeedOrRng, ensure_rng

# above this occupancy, regrowth samples from the explicit complement instead of rejecting
DENSE_REGROW_THRESHOLD = 0.5


def _check_positive_int(name: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ValueError(f"{name} must be an integer >= 1 but is {value!r}")
    return int(value)


def _validate_epsilon(_instance, _attribute, value):
    if not value > 0:
        raise ValueError(f"epsilon must be > 0 but is {value!r}")


def _validate_zeta(_instance, _attribute, value):
    if not 0 <= value < 1:
        raise ValueError(f"zeta must be in [0, 1) but is {value!r}")


@define(frozen=True)
class EvolutionConfig:
    """
    Args:
        epsilon: sparsity level, expected links per layer are epsilon * (n_in + n_out)
        zeta: fraction of each sign group removed per evolution step
        seed: seed for initialization and mutation when no generator is passed
        regrow: add as many random links as were removed (False only for a final epoch)
        forbid_reselect: exclude positions vacated in the same step from regrowth
    """

    epsilon: float = field(default=20.0, converter=float, validator=_validate_epsilon)
    zeta: float = field(default=0.3, converter=float, validator=_validate_zeta)
    seed: Optional[int] = None
    regrow: bool = True
    forbid_reselect: bool = False

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> EvolutionConfig:
        return from_dict_strict(cls, dct, "evolution")

    def final_epoch(self) -> EvolutionConfig:
        return attrs.evolve(self, regrow=False)


@define(frozen=True)
class WeightInitSpec:
    """
    Distribution of initial and regrown weights.

    kind:
        uniform: U(-scale, scale), scale defaults to 1/sqrt(n_in)
        normal: N(0, scale^2), scale defaults to 1/sqrt(n_in)
        he_uniform: U(-sqrt(6/n_in), sqrt(6/n_in))
        xavier: U(-sqrt(6/(n_in+n_out)), sqrt(6/(n_in+n_out)))
    """

    kind: str = field(default=InitKind.UNIFORM)
    scale: Optional[float] = field(default=None)

    @kind.validator
    def _check_kind(self, _attribute, value):
        InitKind.check(value, "weight init kind")

    @scale.validator
    def _check_scale(self, _attribute, value):
        if value is not None and not value > 0:
            raise ValueError(f"init scale must be > 0 but is {value!r}")

    @classmethod
    def from_dict(cls, dct: Mapping[str, Any]) -> WeightInitSpec:
        return from_dict_strict(cls, dct, "init")

    def sample(self, n: int, n_in: int, n_out: int, rng: np.random.Generator) -> np.ndarray:
        fan_in_scale = 1.0 / np.sqrt(n_in)
        if self.kind == InitKind.UNIFORM:
            limit = self.scale if self.scale is not None else fan_in_scale
            return rng.uniform(-limit, limit, size=n)
        if self.kind == InitKind.NORMAL:
            std = self.scale if self.scale is not None else fan_in_scale
            return rng.normal(0.0, std, size=n)
        if self.kind == InitKind.HE_UNIFORM:
            limit = np.sqrt(6.0 / n_in)
        else:
            limit = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-limit, limit, size=n)


@define(eq=False)
class SparseWeights:
    """Evolving weighted topology of one layer. Not safe for concurrent mutation."""

    matrix: sp.csr_matrix
    _in_index: Optional[np.ndarray] = field(init=False, default=None, repr=False)

    @classmethod
    def from_flat_positions(
        cls, n_in: int, n_out: int, positions: np.ndarray, weights: np.ndarray
    ) -> SparseWeights:
        """Positions are in_index * n_out + out_index, they must be unique (any order)."""
        n_in = _check_positive_int("n_in", n_in)
        n_out = _check_positive_int("n_out", n_out)
        positions = np.asarray(positions, dtype=np.int64).ravel()
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if positions.shape != weights.shape:
            raise TopologyError(f"Got {positions.size} positions but {weights.size} weights")
        if positions.size > 0 and (positions.min() < 0 or positions.max() >= n_in * n_out):
            raise TopologyError(f"Link position out of range for a {n_in}x{n_out} layer")
        order = np.argsort(positions, kind="stable")
        positions, weights = positions[order], weights[order]
        if positions.size > 1 and np.any(np.diff(positions) == 0):
            dup = positions[np.flatnonzero(np.diff(positions) == 0)[0]]
            raise TopologyError(f"Duplicate link ({dup // n_out}, {dup % n_out})")
        rows, cols = np.divmod(positions, n_out)
        indptr = np.zeros(n_in + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n_in), out=indptr[1:])
        matrix = sp.csr_matrix((weights, cols, indptr), shape=(n_in, n_out))
        matrix.has_sorted_indices = True
        return cls(matrix)

    @classmethod
    def from_links(
        cls,
        n_in: int,
        n_out: int,
        in_index: np.ndarray,
        out_index: np.ndarray,
        weights: np.ndarray,
    ) -> SparseWeights:
        in_index = np.asarray(in_index, dtype=np.int64).ravel()
        out_index = np.asarray(out_index, dtype=np.int64).ravel()
        if in_index.shape != out_index.shape:
            raise TopologyError(f"Got {in_index.size} input and {out_index.size} output indices")
        bad_in = (in_index < 0) | (in_index >= n_in)
        bad_out = (out_index < 0) | (out_index >= n_out)
        if np.any(bad_in | bad_out):
            k = np.flatnonzero(bad_in | bad_out)[0]
            raise TopologyError(
                f"Link ({in_index[k]}, {out_index[k]}) out of range for a {n_in}x{n_out} layer"
            )
        return cls.from_flat_positions(n_in, n_out, in_index * n_out + out_index, weights)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> SparseWeights:
        """Every nonzero entry of the dense matrix becomes a link."""
        dense = np.asarray(dense, dtype=np.float64)
        rows, cols = np.nonzero(dense)
        return cls.from_links(dense.shape[0], dense.shape[1], rows, cols, dense[rows, cols])

    @classmethod
    def fully_connected(cls, weights: np.ndarray) -> SparseWeights:
        """Every position is a link, including zero weights (dense baseline)."""
        weights = np.asarray(weights, dtype=np.float64)
        n_in, n_out = weights.shape
        return cls.from_flat_positions(n_in, n_out, np.arange(n_in * n_out), weights.ravel())

    @property
    def n_in(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_out(self) -> int:
        return self.matrix.shape[1]

    @property
    def nnz(self) -> int:
        return int(self.matrix.indptr[-1])

    @property
    def values(self) -> np.ndarray:
        """Link weights in link order, a view: writing to it updates the layer."""
        return self.matrix.data

    @property
    def out_index(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def in_index(self) -> np.ndarray:
        if self._in_index is None:
            self._in_index = np.repeat(
                np.arange(self.n_in, dtype=np.int64), np.diff(self.matrix.indptr)
            )
        return self._in_index

    @property
    def flat_positions(self) -> np.ndarray:
        return self.in_index * self.n_out + self.out_index.astype(np.int64)

    @property
    def density(self) -> float:
        return self.nnz / (self.n_in * self.n_out)

    def links(self) -> List[Tuple[int, int, float]]:
        return list(
            zip(self.in_index.tolist(), self.out_index.tolist(), self.values.tolist())
        )

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def copy(self) -> SparseWeights:
        return SparseWeights(self.matrix.copy())

    def replace_structure(self, positions: np.ndarray, weights: np.ndarray) -> None:
        """Swap in a new link set (used by evolve)."""
        new = SparseWeights.from_flat_positions(self.n_in, self.n_out, positions, weights)
        self.matrix = new.matrix
        self._in_index = None

    def validate(self) -> None:
        """Raise TopologyError if the structural invariants are broken."""
        m = self.matrix
        if m.data.shape[0] != m.indptr[-1] or m.indices.shape[0] != m.indptr[-1]:
            raise TopologyError("nnz does not match the number of stored links")
        if m.indices.size and (m.indices.min() < 0 or m.indices.max() >= self.n_out):
            raise TopologyError("out_index out of range")
        pos = self.flat_positions
        if pos.size > 1 and not np.all(np.diff(pos) > 0):
            raise TopologyError("Links are duplicated or not in row-major order")
        if not np.all(np.isfinite(m.data)):
            raise TopologyError("Non-finite weight")


@define
class EvolutionDelta:
    """Audit trail of one evolution step, triples in link order."""

    removed_in: np.ndarray
    removed_out: np.ndarray
    removed_weight: np.ndarray
    added_in: np.ndarray
    added_out: np.ndarray
    added_weight: np.ndarray

    @classmethod
    def empty(cls) -> EvolutionDelta:
        e_int, e_float = np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)
        return cls(e_int, e_int, e_float, e_int.copy(), e_int.copy(), e_float.copy())

    @property
    def removed(self) -> List[Tuple[int, int, float]]:
        return list(
            zip(self.removed_in.tolist(), self.removed_out.tolist(), self.removed_weight.tolist())
        )

    @property
    def added(self) -> List[Tuple[int, int, float]]:
        return list(
            zip(self.added_in.tolist(), self.added_out.tolist(), self.added_weight.tolist())
        )

    @property
    def n_removed(self) -> int:
        return int(self.removed_weight.size)

    @property
    def n_added(self) -> int:
        return int(self.added_weight.size)

    def to_dict(self) -> Dict[str, int]:
        return {"n_removed": self.n_removed, "n_added": self.n_added}


def connection_probability(n_in: int, n_out: int, epsilon: float) -> float:
    n_in = _check_positive_int("n_in", n_in)
    n_out = _check_positive_int("n_out", n_out)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0 but is {epsilon!r}")
    return min(1.0, epsilon * (n_in + n_out) / (n_in * n_out))


def expected_connection_count(n_in: int, n_out: int, epsilon: float) -> float:
    """Expected number of links of an ER layer, min(n_in * n_out, epsilon * (n_in + n_out))."""
    p = connection_probability(n_in, n_out, epsilon)
    if p >= 1.0:
        return float(n_in * n_out)
    return float(epsilon * (n_in + n_out))


def init_erdos_renyi(
    n_in: int,
    n_out: int,
    config: EvolutionConfig,
    init: WeightInitSpec,
    rng: SeedOrRng = None,
) -> SparseWeights:
    """
    Every one of the n_in * n_out positions is a link independently with probability p.

    The number of links is drawn from Binomial(n_in * n_out, p) and the positions uniformly
    without replacement, which gives the same distribution as independent coin flips without
    materializing a dense mask.

    Args:
        n_in: lower layer size
        n_out: upper layer size
        config: epsilon sets p, seed is used when rng is None
        init: weight distribution
        rng: generator to draw from, overrides config.seed
    """
    p = connection_probability(n_in, n_out, config.epsilon)
    rng = ensure_rng(config.seed if rng is None else rng)
    total = n_in * n_out
    if p >= 1.0:
        positions = np.arange(total, dtype=np.int64)
    else:
        k = int(rng.binomial(total, p))
        positions = np.sort(rng.choice(total, size=k, replace=False))
    weights = init.sample(positions.size, n_in, n_out, rng)
    w = SparseWeights.from_flat_positions(n_in, n_out, positions, weights)
    logger.debug(
        f"ER init {n_in}x{n_out} eps={config.epsilon:g}: nnz={w.nnz} "
        f"(expected {expected_connection_count(n_in, n_out, config.epsilon):.0f}), "
        f"density {w.density:.4%}"
    )
    return w


def removal_count(zeta: float, group_size: int) -> int:
    """floor(zeta * group_size), robust to products like 0.29 * 100 = 28.999999999999996."""
    return int(np.floor(np.round(zeta * group_size, 9)))


def select_links_to_remove(values: np.ndarray, zeta: float) -> np.ndarray:
    """
    Link indices (sorted) of the weights closest to zero in each sign group.

    Zeros belong to the positive group and sort before every positive weight. Ties keep link
    order since both sorts are stable.
    """
    nonneg = np.flatnonzero(values >= 0)
    neg = np.flatnonzero(values < 0)
    k_pos = removal_count(zeta, nonneg.size)
    k_neg = removal_count(zeta, neg.size)
    rm_pos = nonneg[np.argsort(values[nonneg], kind="stable")[:k_pos]]
    rm_neg = neg[np.argsort(-values[neg], kind="stable")[:k_neg]]
    return np.sort(np.concatenate([rm_pos, rm_neg]))


def sample_unoccupied_positions(
    total: int, occupied: np.ndarray, n: int, rng: np.random.Generator
) -> np.ndarray:
    """
    Draw n distinct positions uniformly from [0, total) minus the sorted array occupied.

    Returned in draw order. Rejection sampling for sparse occupancy, explicit complement
    above DENSE_REGROW_THRESHOLD.
    """
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    n_free = total - occupied.size
    if n_free < n:
        raise TopologyError(f"Cannot regrow {n} links, only {n_free} unoccupied positions left")
    if occupied.size > DENSE_REGROW_THRESHOLD * total:
        free = np.setdiff1d(np.arange(total, dtype=np.int64), occupied, assume_unique=True)
        return rng.choice(free, size=n, replace=False)

    chosen = np.zeros(0, dtype=np.int64)
    while chosen.size < n:
        need = n - chosen.size
        draw = rng.integers(0, total, size=need + need // 4 + 8, dtype=np.int64)
        draw = draw[~_is_in_sorted(draw, occupied)]
        draw = draw[~np.isin(draw, chosen)]
        _, first = np.unique(draw, return_index=True)
        draw = draw[np.sort(first)]
        chosen = np.concatenate([chosen, draw[:need]])
    return chosen


def _is_in_sorted(x: np.ndarray, sorted_arr: np.ndarray) -> np.ndarray:
    if sorted_arr.size == 0:
        return np.zeros(x.shape, dtype=bool)
    idx = np.searchsorted(sorted_arr, x)
    idx[idx == sorted_arr.size] = 0
    return sorted_arr[idx] == x


def evolve(
    w: SparseWeights,
    config: EvolutionConfig,
    init: WeightInitSpec,
    rng: SeedOrRng = None,
) -> EvolutionDelta:
    """
    One prune-and-regrow step, mutates w in place.

    Removes floor(zeta * |P u Z|) nonnegative links with the smallest weights and
    floor(zeta * |N|) negative links with the largest weights. If config.regrow, the same
    number of links is added at positions drawn uniformly from those unoccupied after the
    removal, with weights from init, so nnz stays constant.

    Raises:
        TopologyError: the unoccupied pool is smaller than the number of links to add
    """
    rng = ensure_rng(config.seed if rng is None else rng)
    if config.zeta == 0 or w.nnz == 0:
        return EvolutionDelta.empty()

    values = w.values
    removed_idx = select_links_to_remove(values, config.zeta)
    if removed_idx.size == 0:
        return EvolutionDelta.empty()
    keep = np.ones(w.nnz, dtype=bool)
    keep[removed_idx] = False

    in_index, out_index = w.in_index, w.out_index.astype(np.int64)
    old_positions = w.flat_positions
    kept_positions = old_positions[keep]
    removed_weight = values[removed_idx].copy()
    removed_in, removed_out = in_index[removed_idx].copy(), out_index[removed_idx].copy()

    if config.regrow:
        occupied = old_positions if config.forbid_reselect else kept_positions
        n_add = removed_idx.size
        added_positions = sample_unoccupied_positions(
            w.n_in * w.n_out, occupied, n_add, rng
        )
        added_weight = init.sample(n_add, w.n_in, w.n_out, rng)
    else:
        added_positions = np.zeros(0, dtype=np.int64)
        added_weight = np.zeros(0, dtype=np.float64)

    w.replace_structure(
        np.concatenate([kept_positions, added_positions]),
        np.concatenate([values[keep], added_weight]),
    )
    added_in, added_out = np.divmod(added_positions, w.n_out)
    delta = EvolutionDelta(
        removed_in, removed_out, removed_weight, added_in, added_out, added_weight
    )
    logger.debug(
        f"Evolve {w.n_in}x{w.n_out}: removed {delta.n_removed}, added {delta.n_added}, "
        f"nnz {w.nnz}"
    )
    return delta


def realign_link_values(
    values: np.ndarray,
    old_positions: np.ndarray,
    new_positions: np.ndarray,
    fill: float = 0.0,
) -> np.ndarray:
    """
    Move per-link state (e.g. momentum) from an old link layout to a new one.

    Both position arrays must be sorted. Links present in both layouts keep their value,
    new links get fill.
    """
    out = np.full(new_positions.shape, fill, dtype=np.float64)
    if old_positions.size == 0 or new_positions.size == 0:
        return out
    idx = np.searchsorted(old_positions, new_positions)
    idx_clip = np.minimum(idx, old_positions.size - 1)
    found = old_positions[idx_clip] == new_positions
    out[found] = values[idx_clip[found]]
    return out


def degree_distribution(w: SparseWeights, side: str) -> np.ndarray:
    """
    Per-neuron link counts.

    Args:
        w: topology
        side: "input" for the degree of each lower neuron, "output" for each upper neuron

    Returns:
        int array of length n_in or n_out, sums to nnz
    """
    Side.check(side, "side")
    if side == Side.INPUT:
        return np.diff(w.matrix.indptr).astype(np.int64)
    return np.bincount(w.out_index, minlength=w.n_out).astype(np.int64)


def degree_histogram(degrees: np.ndarray) -> np.ndarray:
    """counts[d] = number of neurons with degree d."""
    return np.bincount(np.asarray(degrees, dtype=np.int64))
