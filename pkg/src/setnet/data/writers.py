"""Fixture writers, one per loader format. Loading a written file gives back the same arrays."""

from __future__ import annotations

import gzip
import os
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from setnet.data.dataset import Dataset
from setnet.data.loaders import (
    CIFAR_IMAGE_BYTES,
    IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC,
    SPARSE_HEADER_KEY,
)
from setnet.errors import DataFormatError
from setnet.iotools import format_to_csv
from setnet.typext import PathType


def _write_bytes(path: PathType, data: bytes, compress: bool) -> Path:
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    if compress:
        with gzip.open(path, "wb") as fh:
            fh.write(data)
    else:
        path.write_bytes(data)
    return path


def _check_uint8(arr: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.size and (arr.min() < 0 or arr.max() > 255 or not np.all(arr == np.round(arr))):
        raise DataFormatError(f"{what} must be integers in [0, 255]")
    return arr.astype(np.uint8)


def write_idx(
    images: np.ndarray,
    labels: np.ndarray,
    images_path: PathType,
    labels_path: PathType,
    compress: bool = False,
) -> None:
    """
    Args:
        images: uint8 (n, rows, cols)
        labels: uint8 (n,)
        images_path: output image file
        labels_path: output label file
        compress: gzip the files
    """
    images = _check_uint8(images, "IDX pixels")
    labels = _check_uint8(labels, "IDX labels")
    if images.ndim != 3:
        raise DataFormatError(f"IDX images must be (n, rows, cols), got shape {images.shape}")
    header = struct.pack(">iiii", IDX_IMAGES_MAGIC, *images.shape)
    _write_bytes(images_path, header + images.tobytes(order="C"), compress)
    header = struct.pack(">ii", IDX_LABELS_MAGIC, labels.shape[0])
    _write_bytes(labels_path, header + labels.tobytes(), compress)


def write_cifar10_binary(pixels: np.ndarray, labels: np.ndarray, path: PathType) -> Path:
    """pixels: uint8 (n, 3072) in file layout, labels: uint8 (n,)."""
    pixels = _check_uint8(pixels, "CIFAR-10 pixels")
    labels = _check_uint8(labels, "CIFAR-10 labels")
    if pixels.ndim != 2 or pixels.shape[1] != CIFAR_IMAGE_BYTES:
        raise DataFormatError(f"CIFAR-10 pixels must be (n, 3072), got shape {pixels.shape}")
    records = np.concatenate([labels[:, None], pixels], axis=1)
    return _write_bytes(path, records.tobytes(order="C"), compress=False)


def write_csv_numeric(
    dataset: Dataset, path: PathType, label_column: Optional[int] = 0, header: bool = False
) -> Path:
    """Floats are written with repr() precision, the label as an integer."""
    rows = [[repr(float(v)) for v in row] for row in dataset.features]
    if dataset.labels is not None and label_column is not None:
        n_cols = dataset.n_features + 1
        col = label_column % n_cols
        for row, label in zip(rows, dataset.labels):
            row.insert(col, str(int(label)))
    table = rows
    if header:
        n_cols = len(rows[0]) if rows else dataset.n_features
        table = [[f"c{i}" for i in range(n_cols)]] + rows
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    path.write_text(format_to_csv(table), encoding="utf-8")
    return path


def write_sparse_binary(dataset: Dataset, path: PathType) -> Path:
    x = dataset.features
    if not np.all((x == 0) | (x == 1)):
        raise DataFormatError("Index-list format needs binary features")
    lines = [f"# {SPARSE_HEADER_KEY} {dataset.n_features}"]
    for row_num, row in enumerate(x):
        idx = " ".join(str(i) for i in np.flatnonzero(row))
        if dataset.labels is not None:
            lines.append(f"{int(dataset.labels[row_num])}: {idx}".rstrip())
        else:
            lines.append(idx)
    path = Path(path)
    os.makedirs(path.parent, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
