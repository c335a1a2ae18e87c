import struct

import numpy as np
import pytest

from setnet.data.dataset import Dataset
from setnet.data.loaders import (
    cifar10_record_count,
    load_cifar10_binary,
    load_csv_numeric,
    load_idx,
    load_sparse_binary,
    read_idx_header,
    read_sparse_binary_header,
)
from setnet.data.writers import (
    write_cifar10_binary,
    write_csv_numeric,
    write_idx,
    write_sparse_binary,
)
from setnet.errors import DataFormatError
from setnet.paths import get_data_dir


@pytest.fixture(params=[False, True], ids=["plain", "gzip"])
def idx_fixture(request, tmp_path):
    images = np.arange(2 * 3 * 4, dtype=np.uint8).reshape(2, 3, 4) * 10
    labels = np.array([7, 2], dtype=np.uint8)
    img_file, lbl_file = tmp_path / "images.idx", tmp_path / "labels.idx"
    write_idx(images, labels, img_file, lbl_file, compress=request.param)
    yield images, labels, img_file, lbl_file


def test_idx_two_image_fixture(idx_fixture):
    images, labels, img_file, lbl_file = idx_fixture
    ds = load_idx(img_file, lbl_file)
    assert ds.features.shape == (2, 12)
    assert ds.image_shape == (3, 4)
    pixels = np.round(ds.features * 255).astype(np.uint8)
    np.testing.assert_array_equal(pixels, images.reshape(2, -1))
    np.testing.assert_array_equal(ds.labels, [7, 2])
    assert read_idx_header(img_file) == (2051, (2, 3, 4))


def test_idx_fixture_bytes_are_standard(tmp_path):
    # independent writer: plain struct packing of the documented layout
    img_file, lbl_file = tmp_path / "i", tmp_path / "l"
    img_file.write_bytes(struct.pack(">iiii", 0x803, 1, 2, 2) + bytes([0, 255, 128, 1]))
    lbl_file.write_bytes(struct.pack(">ii", 0x801, 1) + bytes([5]))
    ds = load_idx(img_file, lbl_file)
    np.testing.assert_array_equal(ds.features, [[0.0, 1.0, 128 / 255, 1 / 255]])
    assert ds.labels.tolist() == [5]


def test_idx_wrong_magic(idx_fixture, tmp_path):
    _, _, img_file, _ = idx_fixture
    bad = tmp_path / "bad_labels.idx"
    bad.write_bytes(struct.pack(">ii", 2051, 2) + bytes([1, 2]))
    with pytest.raises(DataFormatError, match="magic"):
        load_idx(img_file, bad)


def test_idx_truncated_and_count_mismatch(tmp_path):
    img_file, lbl_file = tmp_path / "i", tmp_path / "l"
    img_file.write_bytes(struct.pack(">iiii", 2051, 2, 2, 2) + bytes(5))
    lbl_file.write_bytes(struct.pack(">ii", 2049, 2) + bytes(2))
    with pytest.raises(DataFormatError, match="Truncated"):
        load_idx(img_file, lbl_file)
    img_file.write_bytes(struct.pack(">iiii", 2051, 3, 2, 2) + bytes(12))
    with pytest.raises(DataFormatError):
        load_idx(img_file, lbl_file)


def test_cifar_single_record(tmp_path):
    pixels = (np.arange(3072) % 256).astype(np.uint8)[None, :]
    file = write_cifar10_binary(pixels, np.array([9], dtype=np.uint8), tmp_path / "b.bin")
    assert file.stat().st_size == 3073
    assert cifar10_record_count(file) == 1
    ds = load_cifar10_binary(file)
    assert ds.labels.tolist() == [9]
    assert ds.image_shape == (3, 32, 32)
    np.testing.assert_array_equal(np.round(ds.features * 255).astype(np.uint8), pixels)


def test_cifar_multiple_batches(tmp_path):
    rng = np.random.default_rng(0)
    files = []
    for i in range(3):
        pixels = rng.integers(0, 256, size=(4, 3072)).astype(np.uint8)
        files.append(write_cifar10_binary(pixels, np.full(4, i, np.uint8), tmp_path / f"{i}.bin"))
    ds = load_cifar10_binary(files)
    assert ds.n_samples == 12
    assert ds.labels.tolist() == [0] * 4 + [1] * 4 + [2] * 4


def test_cifar_truncated(tmp_path):
    file = tmp_path / "t.bin"
    file.write_bytes(bytes(3073 + 100))
    with pytest.raises(DataFormatError, match="multiple of 3073"):
        load_cifar10_binary(file)


def test_csv_three_rows(tmp_path):
    file = tmp_path / "d.csv"
    file.write_text("1,0.5,-2.25\n0,3.0,1e-3\n1,0.125,7\n")
    ds = load_csv_numeric(file, label_column=0)
    np.testing.assert_array_equal(ds.features, [[0.5, -2.25], [3.0, 1e-3], [0.125, 7.0]])
    assert ds.labels.tolist() == [1, 0, 1]


def test_csv_writer_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    ds = Dataset(rng.normal(size=(5, 28)), rng.integers(0, 2, 5))
    file = write_csv_numeric(ds, tmp_path / "higgs.csv", label_column=0)
    assert len(file.read_text().splitlines()[0].split(",")) == 29
    ds2 = load_csv_numeric(file, label_column=0)
    np.testing.assert_array_equal(ds2.features, ds.features)
    np.testing.assert_array_equal(ds2.labels, ds.labels)
    ds3 = load_csv_numeric(file, label_column=0, skip_rows=2, max_rows=2)
    np.testing.assert_array_equal(ds3.features, ds.features[2:4])


def test_csv_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataFormatError):
        load_csv_numeric(empty)
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3\n0,x,4\n")
    with pytest.raises(DataFormatError, match="row 2, column 2"):
        load_csv_numeric(bad)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2,3\n0,4\n")
    with pytest.raises(DataFormatError):
        load_csv_numeric(ragged)


def test_sparse_binary_line(tmp_path):
    file = tmp_path / "s.txt"
    file.write_text("3: 0 2\n1:\n")
    ds = load_sparse_binary(file, n_features=4)
    np.testing.assert_array_equal(ds.features, [[1, 0, 1, 0], [0, 0, 0, 0]])
    assert ds.labels.tolist() == [3, 1]


def test_sparse_binary_roundtrip_and_header(tmp_path):
    rng = np.random.default_rng(2)
    ds = Dataset((rng.random((6, 9)) < 0.3).astype(float), None, "binary")
    file = write_sparse_binary(ds, tmp_path / "s.txt")
    assert read_sparse_binary_header(file) == 9
    ds2 = load_sparse_binary(file)
    np.testing.assert_array_equal(ds2.features, ds.features)
    assert ds2.labels is None


def test_sparse_binary_out_of_range(tmp_path):
    file = tmp_path / "s.txt"
    file.write_text("0: 1 4\n")
    with pytest.raises(DataFormatError, match="out of range"):
        load_sparse_binary(file, n_features=4)
    with pytest.raises(DataFormatError):
        load_sparse_binary(file)


def test_dataset_validation():
    with pytest.raises(DataFormatError):
        Dataset(np.array([[0.0, 0.5]]), None, "binary")
    with pytest.raises(DataFormatError):
        Dataset(np.array([[1.5]]), None, "grayscale01")
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 2)), np.zeros(2))


def _first_existing(base, name):
    for candidate in (base / name, base / f"{name}.gz"):
        if candidate.is_file():
            return candidate
    return base / name


def _mnist_files():
    base = get_data_dir() / "mnist"
    names = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
    return [_first_existing(base, n) for n in names]


@pytest.mark.slow
def test_mnist_train_set():
    images, labels = _mnist_files()
    if not images.is_file() or not labels.is_file():
        pytest.skip(f"MNIST not found in {images.parent}")
    ds = load_idx(images, labels, name="mnist")
    assert ds.features.shape == (60000, 784)
    assert set(ds.labels.tolist()) == set(range(10))
