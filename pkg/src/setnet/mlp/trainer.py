"""
SET-MLP training loop.

One epoch: shuffle, minibatch forward / backward / SGD step, then (set mode only) one
prune-and-regrow step on every layer after the last batch. The final epoch prunes without
regrowing. Fixprob and dense models never change their topology.

MlpTrainer adds the bookkeeping around the epochs: an epoch-0 evaluation of the untrained
model, a metrics CSV, per-layer power-law p-values and topology snapshots at a configurable
cadence, and a final checkpoint.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from attrs import define, field
from loguru import logger

from setnet.analysis.connectivity import visible_connectivity_map
from setnet.analysis.powerlaw import MIN_DEGREES, PowerLawReport, power_law_report
from setnet.consts import ModelMode, Side
from setnet.data.dataset import Dataset
from setnet.data.transforms import augment_horizontal_flip, one_hot
from setnet.dtime import Stopwatch, format_seconds_adaptive
from setnet.errors import ShapeMismatchError, UndefinedFitError
from setnet.iotools import append_csv_rows, dump_yaml, write_csv_rows
from setnet.mlp.checkpoint import save_mlp_checkpoint
from setnet.mlp.config import TrainConfig
from setnet.mlp.model import MlpModel, build_mlp, count_weights
from setnet.mlp.optim import VelocityState, realign_velocity, sgd_step
from setnet.sparse.layers import dropout_mask
from setnet.sparse.losses import accuracy, cross_entropy_loss
from setnet.sparse.snapshot import save_topology_snapshot
from setnet.sparse.topology import degree_distribution, evolve
from setnet.tqdmext import epoch_pbar
from setnet.typext import SeedOrRng, ensure_rng, spawn_rngs

METRICS_FILE = "metrics.csv"
POWER_LAW_FILE = "power_law.csv"
POWER_LAW_COLUMNS = ["epoch", "layer", "gamma_hat", "d_min", "p_value", "n_tail", "statistic"]
EVAL_BATCH_SIZE = 1000
# init, shuffle and dropout, evolution, power-law Monte-Carlo
N_RNG_STREAMS = 4


def metrics_columns(n_pvalue_layers: int) -> List[str]:
    return (
        ["epoch", "train_loss", "test_accuracy", "nnz_total"]
        + [f"pvalue_layer{k}" for k in range(1, n_pvalue_layers + 1)]
        + ["walltime_s"]
    )


@define
class EpochMetrics:
    """
    Args:
        epoch: 0 for the untrained model, then 1..epochs
        train_loss: mean cross-entropy over the epoch's minibatches (inference loss at epoch 0)
        test_accuracy: fraction of correctly classified test samples
        nnz_per_layer: links per layer after the epoch's evolution step
        p_values: power-law p-value per hidden layer, nan if not computed
        walltime_s: seconds spent on the epoch including evaluation
    """

    epoch: int
    train_loss: float
    test_accuracy: float = float("nan")
    nnz_per_layer: List[int] = field(factory=list)
    p_values: List[float] = field(factory=list)
    walltime_s: float = 0.0

    @property
    def nnz_total(self) -> int:
        return int(sum(self.nnz_per_layer))

    def to_row(self) -> Dict[str, Any]:
        row = {
            "epoch": self.epoch,
            "train_loss": float(self.train_loss),
            "test_accuracy": float(self.test_accuracy),
            "nnz_total": self.nnz_total,
        }
        for k, p in enumerate(self.p_values, start=1):
            row[f"pvalue_layer{k}"] = float(p)
        row["walltime_s"] = round(float(self.walltime_s), 3)
        return row


def _check_dataset(model: MlpModel, dataset: Dataset) -> None:
    if dataset.labels is None:
        raise ValueError(f"{dataset.name} has no labels, the MLP needs a labeled dataset")
    if dataset.n_features != model.layers[0].n_in:
        raise ShapeMismatchError(
            f"{dataset.name} has {dataset.n_features} features but the model expects "
            f"{model.layers[0].n_in}"
        )


def train_epoch(
    model: MlpModel,
    train_set: Dataset,
    config: TrainConfig,
    rng: SeedOrRng = None,
    velocity: Optional[VelocityState] = None,
    epoch: int = 1,
    final_epoch: bool = False,
    evolution_rng: SeedOrRng = None,
) -> EpochMetrics:
    """
    Train one epoch in place.

    Args:
        model: the model, mutated
        train_set: labeled training data
        config: SGD and evolution settings
        rng: shuffling, dropout and augmentation
        velocity: momentum state carried across epochs, fresh zeros if None
        epoch: index stored in the metrics
        final_epoch: prune without regrowing (set mode)
        evolution_rng: generator for regrowth, defaults to rng

    Returns:
        metrics with train loss and nnz, test_accuracy is left for the caller
    """
    _check_dataset(model, train_set)
    rng = ensure_rng(rng)
    evolution_rng = rng if evolution_rng is None else ensure_rng(evolution_rng)
    if velocity is None:
        velocity = VelocityState.zeros(model)
    n_classes = model.layers[-1].n_out
    flip = config.augment_flip and train_set.image_shape is not None

    order = rng.permutation(train_set.n_samples)
    total_loss = 0.0
    for start in range(0, train_set.n_samples, config.batch_size):
        idx = order[start : start + config.batch_size]
        x = train_set.features[idx]
        y = one_hot(train_set.labels[idx], n_classes)
        if flip:
            x = augment_horizontal_flip(x, train_set.image_shape, rng)
        if config.input_dropout_rate > 0:
            keep = dropout_mask(x.shape, config.input_dropout_rate, rng)
            x = x * keep / (1.0 - config.input_dropout_rate)
        probs, caches = model.forward(x, training=True, dropout_rate=config.dropout_rate, rng=rng)
        loss, grad = cross_entropy_loss(probs, y)
        total_loss += loss * idx.size
        sgd_step(model, model.backward(caches, grad), velocity, config)

    if model.mode == ModelMode.SET:
        evo = config.evolution.final_epoch() if final_epoch else config.evolution
        for layer, vel in zip(model.layers, velocity.layers):
            old_positions = layer.weights.flat_positions
            delta = evolve(layer.weights, evo, config.init, rng=evolution_rng)
            vel.weights = realign_velocity(
                vel.weights, old_positions, layer.weights, delta, config.velocity_carry_over
            )
    return EpochMetrics(
        epoch=epoch,
        train_loss=total_loss / max(1, train_set.n_samples),
        nnz_per_layer=model.nnz_per_layer,
    )


def evaluate(model: MlpModel, dataset: Dataset, batch_size: int = EVAL_BATCH_SIZE) -> float:
    """Accuracy of the argmax prediction, dropout disabled."""
    _check_dataset(model, dataset)
    if dataset.n_samples == 0:
        return float("nan")
    return accuracy(model.predict_proba(dataset.features, batch_size), dataset.labels)


def evaluate_loss(model: MlpModel, dataset: Dataset, batch_size: int = EVAL_BATCH_SIZE) -> float:
    """Mean cross-entropy in inference mode."""
    _check_dataset(model, dataset)
    probs = model.predict_proba(dataset.features, batch_size)
    return cross_entropy_loss(probs, one_hot(dataset.labels, model.layers[-1].n_out))[0]


def hidden_layer_reports(
    model: MlpModel, n_monte_carlo: int, rng: SeedOrRng = None
) -> List[Optional[PowerLawReport]]:
    """
    Power-law report of the in-degrees of the hidden neurons behind each layer except the
    output layer. The binomial null uses n_in trials, which is what an ER layer produces.
    None where the test is undefined (dense layers, too few neurons, degenerate degrees).
    """
    rng = ensure_rng(rng)
    reports = []
    for k, layer in enumerate(model.layers[:-1], start=1):
        degrees = degree_distribution(layer.weights, Side.OUTPUT)
        if model.mode == ModelMode.DENSE or degrees.size < MIN_DEGREES:
            reports.append(None)
            continue
        try:
            reports.append(
                power_law_report(degrees, 2, n_monte_carlo, rng, n_trials=layer.n_in)
            )
        except UndefinedFitError as e:
            logger.warning(f"Layer {k}: power-law fit undefined, p-value recorded as nan: {e}")
            reports.append(None)
    return reports


@define
class MlpTrainer:
    """
    Usage:
        >>> trainer = MlpTrainer.create([784, 300, 10], "relu", "set", TrainConfig(), train, test)
        >>> history = trainer.run()
    """

    model: MlpModel
    config: TrainConfig
    train_set: Dataset
    test_set: Dataset
    out_dir: Optional[Path] = field(
        default=None, converter=lambda p: None if p is None else Path(p)
    )
    show_progress: bool = False
    history: List[EpochMetrics] = field(factory=list)
    power_law_history: List[Dict[str, Any]] = field(factory=list)
    best_accuracy: float = 0.0
    shuffle_rng: Optional[np.random.Generator] = None
    evolution_rng: Optional[np.random.Generator] = None
    analysis_rng: Optional[np.random.Generator] = None

    def __attrs_post_init__(self):
        _, shuffle_rng, evolution_rng, analysis_rng = spawn_rngs(self.config.seed, N_RNG_STREAMS)
        if self.shuffle_rng is None:
            self.shuffle_rng = shuffle_rng
        if self.evolution_rng is None:
            self.evolution_rng = evolution_rng
        if self.analysis_rng is None:
            self.analysis_rng = analysis_rng

    @classmethod
    def create(
        cls,
        sizes: Sequence[int],
        activations: Union[str, Sequence[str]],
        mode: str,
        config: TrainConfig,
        train_set: Dataset,
        test_set: Dataset,
        out_dir: Optional[Path] = None,
        show_progress: bool = False,
    ) -> MlpTrainer:
        """Build the model from the init stream of config.seed and wrap it."""
        init_rng = spawn_rngs(config.seed, N_RNG_STREAMS)[0]
        model = build_mlp(sizes, activations, mode, config.evolution, config.init, rng=init_rng)
        return cls(model, config, train_set, test_set, out_dir, show_progress)

    @property
    def n_pvalue_layers(self) -> int:
        return len(self.model.layers) - 1

    def _p_values(self, epoch: int) -> List[float]:
        every = self.config.pvalue_every
        if every == 0 or epoch % every != 0:
            return [float("nan")] * self.n_pvalue_layers
        reports = hidden_layer_reports(
            self.model, self.config.pvalue_monte_carlo, self.analysis_rng
        )
        for k, report in enumerate(reports, start=1):
            if report is not None:
                self.power_law_history.append({"epoch": epoch, "layer": k, **report.to_dict()})
        if self.out_dir is not None:
            rows = [r for r in self.power_law_history if r["epoch"] == epoch]
            append_csv_rows(self.out_dir / POWER_LAW_FILE, rows, POWER_LAW_COLUMNS)
        return [float("nan") if r is None else r.p_value for r in reports]

    def _snapshot(self, epoch: int) -> None:
        every = self.config.snapshot_every
        if self.out_dir is None or every == 0 or epoch % every != 0:
            return
        for k, layer in enumerate(self.model.layers, start=1):
            folder = self.out_dir / "snapshots" / f"epoch_{epoch:04d}"
            save_topology_snapshot(layer.weights, folder / f"layer_{k}.txt")

    def _record(self, metrics: EpochMetrics) -> None:
        self.history.append(metrics)
        self.best_accuracy = max(self.best_accuracy, metrics.test_accuracy)
        if self.out_dir is not None:
            append_csv_rows(
                self.out_dir / METRICS_FILE,
                [metrics.to_row()],
                metrics_columns(self.n_pvalue_layers),
            )
        p_str = ", ".join(f"{p:.3f}" for p in metrics.p_values if not math.isnan(p))
        logger.info(
            f"Epoch {metrics.epoch}: loss {metrics.train_loss:.4f} "
            f"test acc {metrics.test_accuracy:.4f} nnz {metrics.nnz_total}"
            + (f" p-values [{p_str}]" if p_str else "")
            + f" ({format_seconds_adaptive(metrics.walltime_s)})"
        )

    def run(self) -> List[EpochMetrics]:
        """Train all epochs, returns the metrics history including the epoch-0 row."""
        _check_dataset(self.model, self.train_set)
        _check_dataset(self.model, self.test_set)
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            write_csv_rows(self.out_dir / METRICS_FILE, [], metrics_columns(self.n_pvalue_layers))
            write_csv_rows(self.out_dir / POWER_LAW_FILE, [], POWER_LAW_COLUMNS)
        velocity = VelocityState.zeros(self.model)
        total = Stopwatch()

        watch = Stopwatch()
        self._record(
            EpochMetrics(
                epoch=0,
                train_loss=evaluate_loss(self.model, self.train_set),
                test_accuracy=evaluate(self.model, self.test_set),
                nnz_per_layer=self.model.nnz_per_layer,
                p_values=self._p_values(0),
                walltime_s=watch.lap(),
            )
        )
        self._snapshot(0)

        n_epochs = self.config.epochs
        for epoch in epoch_pbar(n_epochs, f"{self.model.mode}-mlp", self.show_progress):
            metrics = train_epoch(
                self.model,
                self.train_set,
                self.config,
                self.shuffle_rng,
                velocity=velocity,
                epoch=epoch,
                final_epoch=epoch == n_epochs,
                evolution_rng=self.evolution_rng,
            )
            metrics.test_accuracy = evaluate(self.model, self.test_set)
            metrics.p_values = self._p_values(epoch)
            metrics.walltime_s = watch.lap()
            self._record(metrics)
            self._snapshot(epoch)

        logger.info(
            f"Finished {n_epochs} epochs in {format_seconds_adaptive(total.total())}, "
            f"best test accuracy {self.best_accuracy:.4f}"
        )
        if self.out_dir is not None:
            self.save_artifacts()
        return self.history

    def summary(self) -> Dict[str, Any]:
        counts = count_weights(self.model, self.config.evolution.epsilon)
        last = self.history[-1] if self.history else None
        return {
            "mode": self.model.mode,
            "sizes": self.model.sizes,
            "epochs": self.config.epochs,
            "final_test_accuracy": None if last is None else float(last.test_accuracy),
            "best_test_accuracy": float(self.best_accuracy),
            "nnz_realized": counts.realized,
            "nnz_expected": counts.expected,
            "nnz_dense": counts.dense,
        }

    def save_artifacts(self) -> None:
        """Checkpoint, summary and (for 2-d image inputs) the first-layer connectivity map."""
        out = self.out_dir
        save_mlp_checkpoint(
            self.model,
            out / "checkpoint",
            {"epoch": self.config.epochs, "config": self.config.to_dict()},
        )
        dump_yaml(self.summary(), out / "summary.yaml")
        shape = self.train_set.image_shape
        if shape is not None and len(shape) == 2:
            cmap = visible_connectivity_map(self.model.layers[0].weights, *shape)
            cmap.write_text(out / "connectivity_layer1.txt")
            cmap.write_pgm(out / "connectivity_layer1.pgm")
