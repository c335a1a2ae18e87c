import numpy as np
import pytest

from setnet.data.dataset import Dataset
from setnet.data.transforms import (
    augment_horizontal_flip,
    binarize,
    one_hot,
    standardize,
    subsample,
    train_test_split,
)


def test_binarize_threshold():
    ds = Dataset(np.array([[0.2, 0.5, 0.9]]), None, "grayscale01")
    out = binarize(ds, 0.5)
    assert out.feature_kind == "binary"
    assert out.features.tolist() == [[0.0, 1.0, 1.0]]


def test_binarize_is_idempotent():
    rng = np.random.default_rng(0)
    ds = Dataset(rng.random((20, 7)), None, "grayscale01")
    once = binarize(ds)
    twice = binarize(once)
    np.testing.assert_array_equal(once.features, twice.features)
    with pytest.raises(ValueError):
        binarize(Dataset(rng.normal(size=(3, 2))))


def test_standardize_uses_train_statistics():
    train = Dataset(np.array([[0.0, 5.0], [2.0, 5.0]]))
    test = Dataset(np.array([[4.0, 6.0]]))
    train_s, test_s = standardize(train, [test])
    np.testing.assert_allclose(train_s.features, [[-1.0, 0.0], [1.0, 0.0]])
    np.testing.assert_allclose(test_s.features, [[3.0, 1.0]])


def test_one_hot():
    np.testing.assert_array_equal(one_hot(np.array([2, 0]), 3), [[0, 0, 1], [1, 0, 0]])
    with pytest.raises(ValueError):
        one_hot(np.array([3]), 3)


def test_subsample_is_seeded_and_stratified():
    labels = np.repeat([0, 1, 2, 3], [50, 30, 15, 5])
    ds = Dataset(np.arange(100, dtype=float)[:, None], labels)
    a = subsample(ds, 40, rng=7, stratified=True)
    b = subsample(ds, 40, rng=7, stratified=True)
    np.testing.assert_array_equal(a.features, b.features)
    assert a.n_samples == 40
    counts = np.bincount(a.labels, minlength=4)
    assert counts[0] >= 20 and counts[1] >= 12 and counts[2] >= 6 and counts[3] >= 2
    assert np.all(np.diff(a.features[:, 0]) > 0)


def test_train_test_split_partitions_rows():
    ds = Dataset(np.arange(30, dtype=float)[:, None], np.arange(30) % 3)
    train, test = train_test_split(ds, 0.2, rng=1)
    assert (train.n_samples, test.n_samples) == (24, 6)
    rows = np.concatenate([train.features[:, 0], test.features[:, 0]])
    np.testing.assert_array_equal(np.sort(rows), np.arange(30))


def test_horizontal_flip():
    x = np.arange(12, dtype=float).reshape(1, 12)
    flipped = augment_horizontal_flip(x, (3, 2, 2), np.random.default_rng(0), prob=1.0)
    np.testing.assert_array_equal(flipped.reshape(3, 2, 2), x.reshape(3, 2, 2)[..., ::-1])
    kept = augment_horizontal_flip(x, (3, 2, 2), np.random.default_rng(0), prob=0.0)
    np.testing.assert_array_equal(kept, x)
