"""Dataset transforms: binarization, standardization, splits, label encoding and flips."""

from __future__ import annotations

from typing import Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from setnet.consts import FeatureKind
from setnet.data.dataset import Dataset
from setnet.errors import ShapeMismatchError
from setnet.typext import SeedOrRng, ensure_rng


def binarize(dataset: Dataset, threshold: float = 0.5) -> Dataset:
    """Feature becomes 1 if >= threshold else 0. Binary input is returned unchanged."""
    if dataset.feature_kind == FeatureKind.BINARY:
        logger.warning(f"{dataset.name} is already binary, binarize is a no-op")
        return dataset
    if dataset.feature_kind not in (FeatureKind.GRAYSCALE01, FeatureKind.RGB01):
        raise ValueError(
            f"binarize needs grayscale01 or rgb01 features, {dataset.name} is "
            f"{dataset.feature_kind}"
        )
    features = (dataset.features >= threshold).astype(np.float64)
    return dataset.with_features(features, FeatureKind.BINARY)


def standardize(
    train: Dataset, others: Sequence[Dataset] = ()
) -> Union[Dataset, Tuple[Dataset, ...]]:
    """
    Zero mean and unit variance per feature, statistics from train only.

    Constant features keep a scale of 1. Returns the train set alone if others is empty,
    else a tuple (train, *others).
    """
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std[std == 0] = 1.0
    out = [
        ds.with_features((ds.features - mean) / std, FeatureKind.REAL) for ds in (train, *others)
    ]
    return out[0] if not others else tuple(out)


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ShapeMismatchError(f"labels must be in [0, {n_classes}) for one-hot encoding")
    out = np.zeros((labels.shape[0], n_classes), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def subsample(
    dataset: Dataset, n: int, rng: SeedOrRng = None, stratified: bool = False
) -> Dataset:
    """
    Random subset of n rows, in original row order.

    Stratified subsampling keeps class proportions (rounded down, the remainder is drawn
    from the leftover rows).
    """
    if not 0 <= n <= dataset.n_samples:
        raise ValueError(f"Cannot subsample {n} of {dataset.n_samples} rows")
    rng = ensure_rng(rng)
    if not stratified or dataset.labels is None:
        idx = rng.choice(dataset.n_samples, size=n, replace=False)
        return dataset.subset(np.sort(idx))
    chosen = []
    frac = n / dataset.n_samples
    for cls in np.unique(dataset.labels):
        cls_idx = np.flatnonzero(dataset.labels == cls)
        k = int(np.floor(frac * cls_idx.size))
        chosen.append(rng.choice(cls_idx, size=k, replace=False))
    chosen = np.concatenate(chosen) if chosen else np.zeros(0, dtype=np.int64)
    rest = np.setdiff1d(np.arange(dataset.n_samples), chosen)
    extra = rng.choice(rest, size=n - chosen.size, replace=False)
    return dataset.subset(np.sort(np.concatenate([chosen, extra])))


def train_test_split(
    dataset: Dataset, n_test: Union[int, float], rng: SeedOrRng = None
) -> Tuple[Dataset, Dataset]:
    """n_test is a row count, or a fraction if it is a float in (0, 1)."""
    if isinstance(n_test, float) and 0 < n_test < 1:
        n_test = int(round(n_test * dataset.n_samples))
    n_test = int(n_test)
    if not 0 < n_test < dataset.n_samples:
        raise ValueError(f"n_test={n_test} must leave rows in both splits")
    perm = ensure_rng(rng).permutation(dataset.n_samples)
    test_idx, train_idx = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    return (
        dataset.subset(train_idx, f"{dataset.name}-train"),
        dataset.subset(test_idx, f"{dataset.name}-test"),
    )


def augment_horizontal_flip(
    x: np.ndarray,
    image_shape: Tuple[int, ...],
    rng: np.random.Generator,
    prob: float = 0.5,
    out: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Mirror each image left-right with probability prob. The last image axis is the width."""
    if int(np.prod(image_shape)) != x.shape[1]:
        raise ShapeMismatchError(f"image_shape {image_shape} does not match {x.shape[1]} features")
    flip = rng.random(x.shape[0]) < prob
    out = x.copy() if out is None else out
    if np.any(flip):
        imgs = x[flip].reshape((-1, *image_shape))
        out[flip] = imgs[..., ::-1].reshape(imgs.shape[0], -1)
    return out
