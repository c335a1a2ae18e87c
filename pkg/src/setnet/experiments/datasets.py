"""Build datasets from a DatasetSpec, and describe them from file headers for validation."""

from __future__ import annotations

from typing import Any, Mapping, Optional, Tuple

import attrs
import numpy as np
from attrs import define
from loguru import logger

from setnet.consts import DatasetFormat, FeatureKind, SyntheticKind
from setnet.data.dataset import Dataset
from setnet.data.loaders import (
    CIFAR_IMAGE_BYTES,
    CIFAR_IMAGE_SHAPE,
    IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
    cifar10_record_count,
    count_data_lines,
    csv_column_count,
    load_cifar10_binary,
    load_csv_numeric,
    load_idx,
    load_sparse_binary,
    read_idx_array,
    read_idx_header,
    read_sparse_binary_header,
)
from setnet.data.synthetic import make_synthetic, synthetic_params
from setnet.data.transforms import binarize, standardize, subsample, train_test_split
from setnet.errors import ConfigValidationError, DataFormatError
from setnet.experiments.config import DatasetSpec, required_files
from setnet.paths import resolve_data_path
from setnet.typext import derive_seed

# key of the dataset stream in derive_seed(seed, key)
DATA_SEED_KEY = 1


@define
class DatasetDescription:
    """
    What the model side needs to know about a dataset, after preprocessing.

    Args:
        n_features: features per row
        n_classes: None if unknown without reading the data
        feature_kind: binary, grayscale01, real or rgb01
        n_train: training rows, None if unknown without reading the data
        n_test: test rows, None if there is no test split or the count is unknown
        image_shape: shape of one sample as an image
    """

    n_features: int
    n_classes: Optional[int]
    feature_kind: str
    n_train: Optional[int] = None
    n_test: Optional[int] = None
    image_shape: Optional[Tuple[int, ...]] = None


def _cifar_files(args: Mapping[str, Any]) -> list:
    files = args["files"]
    files = files if isinstance(files, (list, tuple)) else [files]
    return [resolve_data_path(str(f)) for f in files]


def _describe_split(spec: DatasetSpec, args: Mapping[str, Any]) -> DatasetDescription:
    fmt = spec.format
    if fmt == DatasetFormat.IDX:
        images, labels = resolve_data_path(args["images"]), resolve_data_path(args["labels"])
        magic, dims = read_idx_header(images)
        if magic != IDX_IMAGES_MAGIC:
            raise DataFormatError(f"{images} is an IDX labels file, expected images")
        n_classes = spec.n_classes
        if n_classes is None:
            # one byte per sample, cheap next to the images
            label_bytes = read_idx_array(labels, IDX_LABELS_MAGIC)
            n_classes = int(label_bytes.max()) + 1 if label_bytes.size else 0
            n_labels = label_bytes.shape[0]
        else:
            n_labels = read_idx_header(labels)[1][0]
        if n_labels != dims[0]:
            raise DataFormatError(
                f"{dims[0]} images in {images} but {n_labels} labels in {labels}"
            )
        return DatasetDescription(
            int(np.prod(dims[1:])),
            n_classes,
            FeatureKind.GRAYSCALE01,
            dims[0],
            image_shape=tuple(dims[1:]),
        )
    if fmt == DatasetFormat.CIFAR10:
        n_rows = sum(cifar10_record_count(f) for f in _cifar_files(args))
        return DatasetDescription(
            CIFAR_IMAGE_BYTES, 10, FeatureKind.RGB01, n_rows, image_shape=CIFAR_IMAGE_SHAPE
        )
    if fmt == DatasetFormat.CSV:
        n_cols = csv_column_count(resolve_data_path(args["file"]), args.get("delimiter", ","))
        has_label = args.get("label_column", 0) is not None
        return DatasetDescription(
            n_cols - int(has_label),
            spec.n_classes if has_label else None,
            FeatureKind.REAL,
            args.get("max_rows"),
        )
    if fmt == DatasetFormat.SPARSE_BINARY:
        file = resolve_data_path(args["file"])
        n_features = args.get("n_features") or read_sparse_binary_header(file)
        if n_features is None:
            raise DataFormatError(f"{file}: number of features neither given nor in the header")
        return DatasetDescription(
            int(n_features), spec.n_classes, FeatureKind.BINARY, count_data_lines(file)
        )
    params = synthetic_params(args["kind"], {k: v for k, v in args.items() if k != "kind"})
    if args["kind"] == SyntheticKind.PROTOTYPE_MIXTURE:
        return DatasetDescription(
            int(params["n_visible"]),
            int(params["n_prototypes"]),
            FeatureKind.BINARY,
            int(params["n_samples"]),
        )
    n_features = 2 if args["kind"] == SyntheticKind.TWO_MOONS_LIKE else int(params["n_features"])
    return DatasetDescription(n_features, 2, FeatureKind.REAL, int(params["n_samples"]))


def _preprocessed_kind(spec: DatasetSpec, kind: str) -> str:
    if spec.binarize is not None:
        if kind not in (FeatureKind.BINARY, FeatureKind.GRAYSCALE01, FeatureKind.RGB01):
            raise DataFormatError(f"binarize needs grayscale01 or rgb01 features, got {kind}")
        kind = FeatureKind.BINARY
    if spec.standardize:
        kind = FeatureKind.REAL
    return kind


def _capped(n: Optional[int], cap: Optional[int]) -> Optional[int]:
    if n is None or cap is None:
        return n if cap is None else cap
    return min(n, cap)


def describe_dataset(spec: DatasetSpec) -> DatasetDescription:
    """
    Feature and class counts from file headers (and IDX label bytes), without parsing the
    feature payload.

    Raises:
        ConfigValidationError: missing files, one finding each
        DataFormatError: unreadable headers, train and test disagree on the feature count
    """
    missing = [
        f"{key}: no such file {path}" for key, path in required_files(spec) if not path.is_file()
    ]
    if missing:
        raise ConfigValidationError(missing)
    desc = _describe_split(spec, spec.train)
    n_test = None
    if spec.test is not None:
        test = _describe_split(spec, spec.test)
        if test.n_features != desc.n_features:
            raise DataFormatError(
                f"train has {desc.n_features} features but test has {test.n_features}"
            )
        if desc.n_classes is not None and test.n_classes is not None:
            desc.n_classes = max(desc.n_classes, test.n_classes)
        n_test = test.n_train
    elif spec.n_test is not None and desc.n_train is not None:
        n_test = (
            int(round(spec.n_test * desc.n_train))
            if isinstance(spec.n_test, float) and 0 < spec.n_test < 1
            else int(spec.n_test)
        )
        desc.n_train -= n_test
    image_shape = spec.image_shape or desc.image_shape
    if image_shape is not None and int(np.prod(image_shape)) != desc.n_features:
        raise DataFormatError(
            f"image_shape {tuple(image_shape)} does not match {desc.n_features} features"
        )
    return attrs.evolve(
        desc,
        n_classes=desc.n_classes if spec.n_classes is None else spec.n_classes,
        feature_kind=_preprocessed_kind(spec, desc.feature_kind),
        n_train=_capped(desc.n_train, spec.max_train),
        n_test=_capped(n_test, spec.max_test),
        image_shape=image_shape,
    )


def _load_split(
    spec: DatasetSpec, args: Mapping[str, Any], name: str, rng: np.random.Generator
) -> Dataset:
    fmt = spec.format
    if fmt == DatasetFormat.IDX:
        return load_idx(
            resolve_data_path(args["images"]),
            resolve_data_path(args["labels"]),
            name,
            use_cache=spec.use_cache,
        )
    if fmt == DatasetFormat.CIFAR10:
        return load_cifar10_binary(_cifar_files(args), name, use_cache=spec.use_cache)
    if fmt == DatasetFormat.CSV:
        kwargs = {k: v for k, v in args.items() if k != "file"}
        return load_csv_numeric(resolve_data_path(args["file"]), name=name, **kwargs)
    if fmt == DatasetFormat.SPARSE_BINARY:
        return load_sparse_binary(resolve_data_path(args["file"]), args.get("n_features"), name)
    params = {k: v for k, v in args.items() if k != "kind"}
    return attrs.evolve(make_synthetic(args["kind"], params, rng), name=name)


def load_datasets(spec: DatasetSpec, seed: int) -> Tuple[Dataset, Optional[Dataset]]:
    """
    Load, split, subsample and preprocess. Returns (train, test), test is None without a
    test split. All randomness comes from the data stream of seed.
    """
    rng = np.random.default_rng(derive_seed(seed, DATA_SEED_KEY))
    name = spec.display_name
    test = None
    if spec.test is not None:
        train = _load_split(spec, spec.train, f"{name}-train", rng)
        test = _load_split(spec, spec.test, f"{name}-test", rng)
    elif spec.n_test is not None:
        # the split appends -train and -test
        train, test = train_test_split(_load_split(spec, spec.train, name, rng), spec.n_test, rng)
    else:
        train = _load_split(spec, spec.train, f"{name}-train", rng)

    if spec.max_train is not None and spec.max_train < train.n_samples:
        train = subsample(train, spec.max_train, rng, spec.stratified)
    if test is not None and spec.max_test is not None and spec.max_test < test.n_samples:
        test = subsample(test, spec.max_test, rng, spec.stratified)

    # a split may miss the highest class, both get the same count
    n_classes = spec.n_classes
    if n_classes is None:
        n_classes = max(ds.n_classes or 0 for ds in (train, test) if ds is not None) or None

    def finish(ds: Dataset) -> Dataset:
        changes = {"n_classes": n_classes}
        if spec.image_shape is not None:
            changes["image_shape"] = spec.image_shape
        ds = attrs.evolve(ds, **changes)
        if spec.binarize is not None:
            ds = binarize(ds, spec.binarize)
        return ds

    train = finish(train)
    test = None if test is None else finish(test)
    if spec.standardize:
        if test is None:
            train = standardize(train)
        else:
            train, test = standardize(train, [test])
    logger.info(
        f"Dataset {name}: train {train.describe()}"
        + ("" if test is None else f", test {test.describe()}")
    )
    return train, test
