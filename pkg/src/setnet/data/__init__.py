from .dataset import Dataset
from .loaders import load_cifar10_binary, load_csv_numeric, load_idx, load_sparse_binary
from .synthetic import make_synthetic
from .transforms import binarize, one_hot, standardize, subsample, train_test_split

__all__ = [
    "Dataset",
    "load_cifar10_binary",
    "load_csv_numeric",
    "load_idx",
    "load_sparse_binary",
    "make_synthetic",
    "binarize",
    "one_hot",
    "standardize",
    "subsample",
    "train_test_split",
]
