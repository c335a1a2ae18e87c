"""Feature matrix plus optional integer labels and the metadata the trainers need."""

from __future__ import annotations

from typing import Any, Dict, Optional, Tuple

import numpy as np
from attrs import define, field

from setnet.consts import FeatureKind
from setnet.errors import DataFormatError, ShapeMismatchError


def _as_float_matrix(x: Any) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeMismatchError(f"features must be 2-d (rows, features), got shape {x.shape}")
    return x


def _as_labels(y: Any) -> Optional[np.ndarray]:
    if y is None:
        return None
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeMismatchError(f"labels must be 1-d, got shape {y.shape}")
    return y.astype(np.int64)


@define
class Dataset:
    """
    Args:
        features: (rows, features) float64
        labels: (rows,) int64 or None for unsupervised data
        feature_kind: binary, grayscale01, real or rgb01, checked against the values
        name: for logs and result files
        n_classes: number of classes, defaults to max(labels) + 1
        image_shape: shape of one sample as an image, e.g. (28, 28) or (3, 32, 32)
        meta: free-form generator or loader metadata
    """

    features: np.ndarray = field(converter=_as_float_matrix)
    labels: Optional[np.ndarray] = field(default=None, converter=_as_labels)
    feature_kind: str = FeatureKind.REAL
    name: str = "dataset"
    n_classes: Optional[int] = None
    image_shape: Optional[Tuple[int, ...]] = None
    meta: Dict[str, Any] = field(factory=dict)

    def __attrs_post_init__(self):
        FeatureKind.check(self.feature_kind, "feature kind")
        x = self.features
        if not np.all(np.isfinite(x)):
            raise DataFormatError(f"{self.name}: features contain non-finite values")
        if self.feature_kind == FeatureKind.BINARY:
            if not np.all((x == 0) | (x == 1)):
                raise DataFormatError(f"{self.name}: binary features must be 0 or 1")
        elif self.feature_kind in (FeatureKind.GRAYSCALE01, FeatureKind.RGB01):
            if x.size and (x.min() < 0 or x.max() > 1):
                raise DataFormatError(
                    f"{self.name}: {self.feature_kind} features must be in [0, 1]"
                )
        if self.labels is not None:
            if self.labels.shape[0] != x.shape[0]:
                raise ShapeMismatchError(
                    f"{self.name}: {self.labels.shape[0]} labels for {x.shape[0]} rows"
                )
            if self.labels.size and self.labels.min() < 0:
                raise DataFormatError(f"{self.name}: labels must be >= 0")
            if self.n_classes is None:
                self.n_classes = int(self.labels.max()) + 1 if self.labels.size else 0
        if self.image_shape is not None:
            self.image_shape = tuple(int(s) for s in self.image_shape)
            if int(np.prod(self.image_shape)) != x.shape[1]:
                raise ShapeMismatchError(
                    f"{self.name}: image_shape {self.image_shape} does not match "
                    f"{x.shape[1]} features"
                )

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray, name: Optional[str] = None) -> Dataset:
        labels = None if self.labels is None else self.labels[indices]
        return Dataset(
            self.features[indices],
            labels,
            self.feature_kind,
            name or self.name,
            self.n_classes,
            self.image_shape,
            dict(self.meta),
        )

    def with_features(self, features: np.ndarray, feature_kind: str) -> Dataset:
        return Dataset(
            features,
            self.labels,
            feature_kind,
            self.name,
            self.n_classes,
            self.image_shape,
            dict(self.meta),
        )

    def describe(self) -> str:
        n_cls = "unlabeled" if self.labels is None else f"{self.n_classes} classes"
        return f"{self.name}: {self.n_samples}x{self.n_features} {self.feature_kind}, {n_cls}"
