"""
SET-RBM training with contrastive divergence.

One epoch: shuffle, one CD-k update per minibatch, then (set mode only) one prune-and-regrow
step on the visible-hidden topology, except after the last epoch. The log-probability of the
evaluation data is tracked at the epochs given by RbmTrainConfig.eval_epochs, with log Z from
exact enumeration or AIS.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import attrs
import numpy as np
from attrs import define, field
from loguru import logger
from scipy.special import expit

from setnet.analysis.connectivity import visible_connectivity_map
from setnet.consts import FeatureKind, LogZMethod, ModelMode
from setnet.data.dataset import Dataset
from setnet.dtime import Stopwatch, format_seconds_adaptive
from setnet.errors import DataFormatError, ShapeMismatchError
from setnet.iotools import append_csv_rows, dump_yaml, write_csv_rows
from setnet.rbm.ais import ais_log_z
from setnet.rbm.checkpoint import save_rbm_checkpoint
from setnet.rbm.config import RbmTrainConfig
from setnet.rbm.model import (
    EXACT_MAX_UNITS,
    RbmModel,
    base_rate_biases,
    bernoulli,
    build_rbm,
    exact_log_z,
    hidden_input,
    reconstruction_error,
    test_log_prob,
    visible_input,
)
from setnet.sparse.layers import sparse_link_gradient
from setnet.sparse.snapshot import save_topology_snapshot
from setnet.sparse.topology import evolve, realign_link_values
from setnet.tqdmext import epoch_pbar
from setnet.typext import SeedOrRng, ensure_rng, spawn_rngs

METRICS_FILE = "metrics.csv"
METRICS_COLUMNS = [
    "epoch",
    "reconstruction_error",
    "nnz",
    "log_z",
    "log_z_stderr",
    "test_log_prob",
    "walltime_s",
]
N_RNG_STREAMS = 4


@define
class CdStatistics:
    """
    Per-sample means of the CD-k statistics.

    Weight statistics are per link in link order, <v_i h_j> with h the hidden probabilities.
    """

    positive_weights: np.ndarray
    negative_weights: np.ndarray
    positive_visible: np.ndarray
    negative_visible: np.ndarray
    positive_hidden: np.ndarray
    negative_hidden: np.ndarray

    @property
    def weight_gradient(self) -> np.ndarray:
        """Ascent direction of the log-likelihood for the links."""
        return self.positive_weights - self.negative_weights

    @property
    def visible_gradient(self) -> np.ndarray:
        return self.positive_visible - self.negative_visible

    @property
    def hidden_gradient(self) -> np.ndarray:
        return self.positive_hidden - self.negative_hidden


def cd_gradient(
    rbm: RbmModel, batch: np.ndarray, cd_steps: int = 1, rng: SeedOrRng = None
) -> CdStatistics:
    """
    CD-k statistics without touching the model.

    The chain starts at the data, alternates sampled hidden and sampled visible states and
    uses hidden probabilities (not samples) for the final negative phase.
    """
    if cd_steps < 1:
        raise ValueError(f"cd_steps must be >= 1 but is {cd_steps}")
    v0 = np.asarray(batch, dtype=np.float64)
    if v0.ndim != 2 or v0.shape[1] != rbm.n_visible:
        raise ShapeMismatchError(f"Batch of shape {v0.shape} for {rbm.n_visible} visible units")
    rng = ensure_rng(rng)
    ph0 = expit(hidden_input(rbm, v0))
    ph = ph0
    v = v0
    for _ in range(cd_steps):
        h = bernoulli(ph, rng)
        v = bernoulli(expit(visible_input(rbm, h)), rng)
        ph = expit(hidden_input(rbm, v))

    w = rbm.weights
    n = v0.shape[0]

    def link_stats(x, p):
        return sparse_link_gradient(x, p, w.in_index, w.out_index, w.n_out) / n

    return CdStatistics(
        positive_weights=link_stats(v0, ph0),
        negative_weights=link_stats(v, ph),
        positive_visible=v0.mean(axis=0),
        negative_visible=v.mean(axis=0),
        positive_hidden=ph0.mean(axis=0),
        negative_hidden=ph.mean(axis=0),
    )


@define
class RbmVelocity:
    weights: np.ndarray
    visible_bias: np.ndarray
    hidden_bias: np.ndarray

    @classmethod
    def zeros(cls, rbm: RbmModel) -> RbmVelocity:
        return cls(np.zeros(rbm.weights.nnz), np.zeros(rbm.n_visible), np.zeros(rbm.n_hidden))


def _ascent(param, grad, velocity, config: RbmTrainConfig) -> None:
    velocity *= config.momentum
    velocity += config.learning_rate * grad
    param += velocity


def cd_k_update(
    rbm: RbmModel,
    batch: np.ndarray,
    config: RbmTrainConfig,
    velocity: RbmVelocity,
    rng: SeedOrRng = None,
) -> CdStatistics:
    """
    One CD-k momentum step in place:

        v <- mu * v + lr * (<v h>_data - <v h>_recon - weight_decay * w)
        w <- w + v

    Biases use the same step without weight decay.
    """
    stats = cd_gradient(rbm, batch, config.cd_steps, rng)
    if velocity.weights.shape != (rbm.weights.nnz,):
        raise ShapeMismatchError(
            f"Velocity has {velocity.weights.size} entries for {rbm.weights.nnz} links"
        )
    values = rbm.weights.values
    _ascent(values, stats.weight_gradient - config.weight_decay * values, velocity.weights, config)
    _ascent(rbm.visible_bias, stats.visible_gradient, velocity.visible_bias, config)
    _ascent(rbm.hidden_bias, stats.hidden_gradient, velocity.hidden_bias, config)
    return stats


@define
class RbmEpochMetrics:
    """
    Args:
        epoch: 0 for the untrained model, then 1..epochs
        reconstruction_error: mean over the epoch's minibatches (of the training data at epoch 0)
        nnz: links after the epoch's evolution step
        log_z: log partition function, nan on epochs without evaluation
        log_z_stderr: 0 for exact enumeration
        test_log_prob: mean log-probability of the evaluation data in nats
        walltime_s: seconds spent on the epoch including evaluation
    """

    epoch: int
    reconstruction_error: float
    nnz: int
    log_z: float = float("nan")
    log_z_stderr: float = float("nan")
    test_log_prob: float = float("nan")
    walltime_s: float = 0.0

    def to_row(self) -> Dict[str, Any]:
        return {
            "epoch": self.epoch,
            "reconstruction_error": float(self.reconstruction_error),
            "nnz": self.nnz,
            "log_z": float(self.log_z),
            "log_z_stderr": float(self.log_z_stderr),
            "test_log_prob": float(self.test_log_prob),
            "walltime_s": round(float(self.walltime_s), 3),
        }


def check_binary(rbm: RbmModel, dataset: Dataset) -> None:
    """
    Raises:
        ShapeMismatchError: feature count differs from the visible units
        DataFormatError: features are not 0/1
    """
    if dataset.n_features != rbm.n_visible:
        raise ShapeMismatchError(
            f"{dataset.name} has {dataset.n_features} features but the RBM has "
            f"{rbm.n_visible} visible units"
        )
    if dataset.feature_kind != FeatureKind.BINARY:
        x = dataset.features
        if not np.all((x == 0) | (x == 1)):
            raise DataFormatError(
                f"{dataset.name} is {dataset.feature_kind}, the RBM needs binary data "
                f"(binarize it first)"
            )


def train_rbm_epoch(
    rbm: RbmModel,
    train_set: Dataset,
    config: RbmTrainConfig,
    rng: SeedOrRng = None,
    velocity: Optional[RbmVelocity] = None,
    evolution_rng: SeedOrRng = None,
    final_epoch: bool = False,
) -> float:
    """
    Train one epoch in place. Set-mode models evolve after the last batch. On the final
    epoch the weakest links are removed without regrowing them.

    Returns:
        mean reconstruction error over the minibatches
    """
    rng = ensure_rng(rng)
    evolution_rng = rng if evolution_rng is None else ensure_rng(evolution_rng)
    if velocity is None:
        velocity = RbmVelocity.zeros(rbm)
    order = rng.permutation(train_set.n_samples)
    total_error = 0.0
    for start in range(0, train_set.n_samples, config.batch_size):
        batch = train_set.features[order[start : start + config.batch_size]]
        cd_k_update(rbm, batch, config, velocity, rng)
        total_error += reconstruction_error(rbm, batch, rng) * batch.shape[0]
    if rbm.mode == ModelMode.SET:
        evo = config.evolution.final_epoch() if final_epoch else config.evolution
        old_positions = rbm.weights.flat_positions
        evolve(rbm.weights, evo, config.init, rng=evolution_rng)
        velocity.weights = realign_link_values(
            velocity.weights, old_positions, rbm.weights.flat_positions, fill=0.0
        )
    return total_error / max(1, train_set.n_samples)


def estimate_log_z(
    rbm: RbmModel, config: RbmTrainConfig, rng: SeedOrRng = None
) -> Tuple[float, float]:
    """log Z and its standard error, exact if the method allows and the model is small."""
    method = config.log_z_method
    small = min(rbm.n_visible, rbm.n_hidden) <= EXACT_MAX_UNITS
    if method == LogZMethod.EXACT or (method == LogZMethod.AUTO and small):
        return exact_log_z(rbm), 0.0
    return ais_log_z(rbm, config.ais, rng)


@define
class RbmTrainer:
    """
    Usage:
        >>> trainer = RbmTrainer.create(784, 500, "set", RbmTrainConfig(epochs=200), train, test)
        >>> history = trainer.run()
    """

    rbm: RbmModel
    config: RbmTrainConfig
    train_set: Dataset
    test_set: Optional[Dataset] = None
    out_dir: Optional[Path] = field(
        default=None, converter=lambda p: None if p is None else Path(p)
    )
    show_progress: bool = False
    history: List[RbmEpochMetrics] = field(factory=list)
    best_log_prob: float = -math.inf
    sample_rng: Optional[np.random.Generator] = None
    evolution_rng: Optional[np.random.Generator] = None
    ais_rng: Optional[np.random.Generator] = None

    def __attrs_post_init__(self):
        _, sample_rng, evolution_rng, ais_rng = spawn_rngs(self.config.seed, N_RNG_STREAMS)
        if self.sample_rng is None:
            self.sample_rng = sample_rng
        if self.evolution_rng is None:
            self.evolution_rng = evolution_rng
        if self.ais_rng is None:
            self.ais_rng = ais_rng
        if self.config.ais.base_rate_biases is None:
            ais = attrs.evolve(self.config.ais, base_rate_biases=base_rate_biases(self.train_set))
            self.config = attrs.evolve(self.config, ais=ais)

    @classmethod
    def create(
        cls,
        n_visible: int,
        n_hidden: int,
        mode: str,
        config: RbmTrainConfig,
        train_set: Dataset,
        test_set: Optional[Dataset] = None,
        out_dir: Optional[Path] = None,
        show_progress: bool = False,
    ) -> RbmTrainer:
        """Build the model from the init stream of config.seed and wrap it."""
        init_rng = spawn_rngs(config.seed, N_RNG_STREAMS)[0]
        rbm = build_rbm(n_visible, n_hidden, mode, config.evolution, config.init, init_rng)
        return cls(rbm, config, train_set, test_set, out_dir, show_progress)

    @property
    def eval_set(self) -> Dataset:
        return self.train_set if self.test_set is None else self.test_set

    def _evaluate(self, metrics: RbmEpochMetrics) -> None:
        log_z, stderr = estimate_log_z(self.rbm, self.config, self.ais_rng)
        metrics.log_z, metrics.log_z_stderr = log_z, stderr
        metrics.test_log_prob = test_log_prob(self.rbm, self.eval_set, log_z)
        self.best_log_prob = max(self.best_log_prob, metrics.test_log_prob)

    def _snapshot(self, epoch: int) -> None:
        every = self.config.snapshot_every
        if self.out_dir is None or every == 0 or epoch % every != 0:
            return
        save_topology_snapshot(
            self.rbm.weights, self.out_dir / "snapshots" / f"epoch_{epoch:04d}" / "weights.txt"
        )

    def _record(self, metrics: RbmEpochMetrics) -> None:
        self.history.append(metrics)
        if self.out_dir is not None:
            append_csv_rows(self.out_dir / METRICS_FILE, [metrics.to_row()], METRICS_COLUMNS)
        eval_str = ""
        if not math.isnan(metrics.test_log_prob):
            eval_str = (
                f" log Z {metrics.log_z:.3f} (+-{metrics.log_z_stderr:.3f}) "
                f"log-prob {metrics.test_log_prob:.3f}"
            )
        logger.info(
            f"Epoch {metrics.epoch}: recon {metrics.reconstruction_error:.4f} "
            f"nnz {metrics.nnz}{eval_str} ({format_seconds_adaptive(metrics.walltime_s)})"
        )

    def run(self) -> List[RbmEpochMetrics]:
        """Train all epochs, returns the metrics history including the epoch-0 row."""
        check_binary(self.rbm, self.train_set)
        check_binary(self.rbm, self.eval_set)
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            write_csv_rows(self.out_dir / METRICS_FILE, [], METRICS_COLUMNS)
        eval_epochs = set(self.config.eval_epochs())
        velocity = RbmVelocity.zeros(self.rbm)
        total = Stopwatch()

        watch = Stopwatch()
        metrics = RbmEpochMetrics(
            0,
            reconstruction_error(self.rbm, self.train_set, self.sample_rng),
            self.rbm.weights.nnz,
        )
        self._evaluate(metrics)
        metrics.walltime_s = watch.lap()
        self._record(metrics)
        self._snapshot(0)

        for epoch in epoch_pbar(self.config.epochs, f"{self.rbm.mode}-rbm", self.show_progress):
            error = train_rbm_epoch(
                self.rbm,
                self.train_set,
                self.config,
                self.sample_rng,
                velocity,
                self.evolution_rng,
                final_epoch=epoch == self.config.epochs,
            )
            metrics = RbmEpochMetrics(epoch, error, self.rbm.weights.nnz)
            if epoch in eval_epochs:
                self._evaluate(metrics)
            metrics.walltime_s = watch.lap()
            self._record(metrics)
            self._snapshot(epoch)

        logger.info(
            f"Finished {self.config.epochs} epochs in {format_seconds_adaptive(total.total())}, "
            f"best log-prob {self.best_log_prob:.3f}"
        )
        if self.out_dir is not None:
            self.save_artifacts()
        return self.history

    def summary(self) -> Dict[str, Any]:
        last = self.history[-1] if self.history else None
        return {
            "mode": self.rbm.mode,
            "n_visible": self.rbm.n_visible,
            "n_hidden": self.rbm.n_hidden,
            "epochs": self.config.epochs,
            "cd_steps": self.config.cd_steps,
            "nnz": self.rbm.weights.nnz,
            "final_log_prob": None if last is None else float(last.test_log_prob),
            "best_log_prob": float(self.best_log_prob),
        }

    def save_artifacts(self) -> None:
        """Checkpoint, summary and (for 2-d image data) the visible connectivity map."""
        save_rbm_checkpoint(
            self.rbm,
            self.out_dir / "checkpoint",
            {"epoch": self.config.epochs, "config": self.config.to_dict()},
        )
        dump_yaml(self.summary(), self.out_dir / "summary.yaml")
        shape = self.train_set.image_shape
        if shape is not None and len(shape) == 2:
            cmap = visible_connectivity_map(self.rbm.weights, *shape)
            cmap.write_text(self.out_dir / "connectivity_visible.txt")
            cmap.write_pgm(self.out_dir / "connectivity_visible.pgm")


def train_set_rbm(
    rbm: RbmModel,
    dataset: Dataset,
    config: RbmTrainConfig,
    rng: SeedOrRng = None,
    test_set: Optional[Dataset] = None,
    out_dir: Optional[Path] = None,
) -> List[RbmEpochMetrics]:
    """
    Train rbm in place, returns the per-epoch metrics.

    With rng given, sampling, evolution and AIS draw from streams spawned from it, otherwise
    from config.seed.
    """
    rngs = [None] * 3
    if rng is not None:
        rngs = spawn_rngs(rng, 3)
    trainer = RbmTrainer(
        rbm,
        config,
        dataset,
        test_set,
        out_dir,
        sample_rng=rngs[0],
        evolution_rng=rngs[1],
        ais_rng=rngs[2],
    )
    return trainer.run()
