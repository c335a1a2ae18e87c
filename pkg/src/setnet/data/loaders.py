"""
Dataset file formats.

IDX (MNIST), big-endian, optionally gzipped:
    int32 magic  0x00000803 images / 0x00000801 labels
    int32 count, then int32 rows and int32 cols for images
    uint8 payload, row-major

CIFAR-10 binary batches: records of 1 label byte followed by 3072 pixel bytes
(1024 red, 1024 green, 1024 blue, each 32x32 row-major).

Numeric CSV: one sample per line, one column holds the integer label.

Sparse binary index lists, one sample per line:
    # n_features 180
    3: 0 2 17
The label and colon are optional, an unlabeled sample without active features is an empty line.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from setnet.caching import cached_call
from setnet.consts import FeatureKind
from setnet.data.dataset import Dataset
from setnet.errors import DataFormatError
from setnet.iotools import open_maybe_gzip, yield_lines_from_file
from setnet.typext import PathType

IDX_IMAGES_MAGIC = 2051
IDX_LABELS_MAGIC = 2049
CIFAR_IMAGE_BYTES = 3072
CIFAR_RECORD_BYTES = CIFAR_IMAGE_BYTES + 1
CIFAR_IMAGE_SHAPE = (3, 32, 32)
SPARSE_HEADER_KEY = "n_features"


def read_idx_header(path: PathType) -> Tuple[int, Tuple[int, ...]]:
    """Returns (magic, dims) without reading the payload."""
    with open_maybe_gzip(path) as fh:
        return _read_idx_header(fh, path)


def _read_idx_header(fh, path) -> Tuple[int, Tuple[int, ...]]:
    head = fh.read(4)
    if len(head) < 4:
        raise DataFormatError(f"Truncated IDX header in {path}")
    (magic,) = struct.unpack(">i", head)
    if magic not in (IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC):
        raise DataFormatError(f"Bad IDX magic {magic:#010x} in {path}")
    n_dims = magic & 0xFF
    raw = fh.read(4 * n_dims)
    if len(raw) < 4 * n_dims:
        raise DataFormatError(f"Truncated IDX header in {path}")
    return magic, struct.unpack(f">{n_dims}i", raw)


def read_idx_array(path: PathType, expected_magic: int) -> np.ndarray:
    """Parse one IDX file into a uint8 array of the declared shape."""
    with open_maybe_gzip(path) as fh:
        magic, dims = _read_idx_header(fh, path)
        if magic != expected_magic:
            raise DataFormatError(
                f"Bad IDX magic {magic:#010x} in {path}, expected {expected_magic:#010x}"
            )
        n_bytes = int(np.prod(dims))
        payload = fh.read(n_bytes)
    if len(payload) < n_bytes:
        raise DataFormatError(
            f"Truncated IDX file {path}: declared {n_bytes} bytes, found {len(payload)}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def _load_idx_arrays(images_path: str, labels_path: str, _mtimes) -> Tuple[np.ndarray, np.ndarray]:
    images = read_idx_array(images_path, IDX_IMAGES_MAGIC)
    labels = read_idx_array(labels_path, IDX_LABELS_MAGIC)
    return images, labels


def _mtime(path: PathType) -> float:
    return Path(path).stat().st_mtime


def load_idx(
    images_path: PathType,
    labels_path: PathType,
    name: str = "idx",
    use_cache: bool = False,
) -> Dataset:
    """
    Load an IDX image/label pair with pixels scaled to [0, 1].

    Raises:
        DataFormatError: bad magic, truncated file, count mismatch
    """
    images, labels = cached_call(
        use_cache,
        _load_idx_arrays,
        str(images_path),
        str(labels_path),
        (_mtime(images_path), _mtime(labels_path)),
    )
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"{images.shape[0]} images in {images_path} but {labels.shape[0]} labels "
            f"in {labels_path}"
        )
    image_shape = images.shape[1:]
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    ds = Dataset(
        features,
        labels.astype(np.int64),
        FeatureKind.GRAYSCALE01,
        name,
        image_shape=image_shape,
    )
    logger.info(f"Loaded {ds.describe()}")
    return ds


def _load_cifar_arrays(paths: Tuple[str, ...], _mtimes) -> Tuple[np.ndarray, np.ndarray]:
    all_records = []
    for path in paths:
        with open_maybe_gzip(path) as fh:
            raw = fh.read()
        if len(raw) % CIFAR_RECORD_BYTES != 0:
            raise DataFormatError(
                f"CIFAR-10 file {path} has {len(raw)} bytes, not a multiple of "
                f"{CIFAR_RECORD_BYTES}"
            )
        all_records.append(np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES))
    records = np.concatenate(all_records, axis=0)
    return records[:, 1:], records[:, 0]


def cifar10_record_count(path: PathType) -> int:
    size = Path(path).stat().st_size
    if size % CIFAR_RECORD_BYTES != 0:
        raise DataFormatError(
            f"CIFAR-10 file {path} has {size} bytes, not a multiple of {CIFAR_RECORD_BYTES}"
        )
    return size // CIFAR_RECORD_BYTES


def load_cifar10_binary(
    paths: Union[PathType, Sequence[PathType]], name: str = "cifar10", use_cache: bool = False
) -> Dataset:
    """
    Load and concatenate CIFAR-10 binary batches, pixels scaled to [0, 1].

    Features keep the file layout: all red, then green, then blue values of a 32x32 image.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    paths = tuple(str(p) for p in paths)
    pixels, labels = cached_call(
        use_cache, _load_cifar_arrays, paths, tuple(_mtime(p) for p in paths)
    )
    ds = Dataset(
        pixels.astype(np.float64) / 255.0,
        labels.astype(np.int64),
        FeatureKind.RGB01,
        name,
        n_classes=10,
        image_shape=CIFAR_IMAGE_SHAPE,
    )
    logger.info(f"Loaded {ds.describe()} from {len(paths)} file(s)")
    return ds


def load_csv_numeric(
    path: PathType,
    label_column: Optional[int] = 0,
    has_header: bool = False,
    delimiter: str = ",",
    max_rows: Optional[int] = None,
    skip_rows: int = 0,
    name: str = "csv",
) -> Dataset:
    """
    Load a numeric CSV file.

    Args:
        path: file
        label_column: column index of the integer label (negative counts from the end),
            None for unlabeled data
        has_header: skip the first line
        delimiter: field separator
        max_rows: read at most this many data rows
        skip_rows: skip this many data rows first (for contiguous train/test splits)
        name: dataset name

    Raises:
        DataFormatError: empty file, ragged rows, non-numeric cell (row and column in message)
    """
    rows = []
    n_cols = None
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for row_num, row in enumerate(reader, start=1):
            if has_header and row_num == 1:
                continue
            if len(row) == 0 or all(c.strip() == "" for c in row):
                continue
            data_row = row_num - 1 if has_header else row_num
            if data_row <= skip_rows:
                continue
            if max_rows is not None and len(rows) >= max_rows:
                break
            if n_cols is None:
                n_cols = len(row)
            elif len(row) != n_cols:
                raise DataFormatError(
                    f"{path}: row {row_num} has {len(row)} columns, expected {n_cols}"
                )
            values = []
            for col_num, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError as e:
                    raise DataFormatError(
                        f"{path}: non-numeric cell {cell!r} at row {row_num}, column {col_num}"
                    ) from e
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    table = np.array(rows, dtype=np.float64)
    labels = None
    if label_column is not None:
        if not -n_cols <= label_column < n_cols:
            raise DataFormatError(
                f"{path}: label column {label_column} but only {n_cols} columns"
            )
        col = label_column % n_cols
        raw_labels = table[:, col]
        if not np.all(raw_labels == np.round(raw_labels)):
            raise DataFormatError(f"{path}: label column {col + 1} holds non-integer values")
        labels = raw_labels.astype(np.int64)
        table = np.delete(table, col, axis=1)
    ds = Dataset(table, labels, FeatureKind.REAL, name)
    logger.info(f"Loaded {ds.describe()}")
    return ds


def read_sparse_binary_header(path: PathType) -> Optional[int]:
    """n_features declared in the '# n_features K' header line, None if absent."""
    for _, line in yield_lines_from_file(path):
        return _parse_sparse_header(line, path)
    return None


def _parse_sparse_header(line: str, path) -> Optional[int]:
    if not line.startswith("#"):
        return None
    parts = line[1:].split()
    if len(parts) == 2 and parts[0] == SPARSE_HEADER_KEY:
        try:
            return int(parts[1])
        except ValueError as e:
            raise DataFormatError(f"{path}: bad header {line!r}") from e
    return None


def load_sparse_binary(
    path: PathType, n_features: Optional[int] = None, name: str = "sparse-binary"
) -> Dataset:
    """
    Load an index-list file into a dense 0/1 matrix.

    Raises:
        DataFormatError: unknown dimension, out-of-range or non-integer index, mixed
            labeled and unlabeled lines
    """
    header_features = None
    samples = []
    labels = []
    for line_num, line in yield_lines_from_file(path, strip=True, skip_empty=False):
        if line.startswith("#"):
            header_features = header_features or _parse_sparse_header(line, path)
            continue
        label = None
        if ":" in line:
            label_str, line = line.split(":", 1)
            try:
                label = int(label_str)
            except ValueError as e:
                raise DataFormatError(f"{path}: bad label {label_str!r} on line {line_num}") from e
        try:
            idx = [int(tok) for tok in line.split()]
        except ValueError as e:
            raise DataFormatError(f"{path}: non-integer index on line {line_num}") from e
        samples.append((line_num, idx))
        labels.append(label)

    n_features = n_features if n_features is not None else header_features
    if n_features is None:
        raise DataFormatError(f"{path}: number of features neither given nor in the header")
    features = np.zeros((len(samples), n_features), dtype=np.float64)
    for row, (line_num, idx) in enumerate(samples):
        for i in idx:
            if not 0 <= i < n_features:
                raise DataFormatError(
                    f"{path}: index {i} on line {line_num} out of range [0, {n_features})"
                )
        features[row, idx] = 1.0
    has_label = [lab is not None for lab in labels]
    if any(has_label) and not all(has_label):
        raise DataFormatError(f"{path}: some lines have a label and some do not")
    ds = Dataset(
        features, np.array(labels, dtype=np.int64) if all(has_label) and labels else None,
        FeatureKind.BINARY, name,
    )
    logger.info(f"Loaded {ds.describe()}")
    return ds


def count_data_lines(path: PathType) -> int:
    return sum(1 for _, line in yield_lines_from_file(path) if not line.startswith("#"))


def csv_column_count(path: PathType, delimiter: str = ",") -> int:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh, delimiter=delimiter):
            if row:
                return len(row)
    raise DataFormatError(f"{path}: no data rows")

