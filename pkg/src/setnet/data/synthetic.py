"""
Desk-scale synthetic datasets with known structure.

prototype-mixture: binary vectors, each a random prototype with independent bit flips
two-moons-like: two interleaved noisy half circles in 2-d
linearly-separable: points on both sides of a random hyperplane, at least margin away
"""

from __future__ import annotations

from typing import Any, Dict, Mapping, Optional

import numpy as np

from setnet.consts import FeatureKind, SyntheticKind
from setnet.data.dataset import Dataset
from setnet.typext import SeedOrRng, ensure_rng

SYNTHETIC_DEFAULTS: Dict[str, Dict[str, Any]] = {
    SyntheticKind.PROTOTYPE_MIXTURE: {
        "n_samples": 2000,
        "n_visible": 20,
        "n_prototypes": 4,
        "flip": 0.1,
    },
    SyntheticKind.TWO_MOONS_LIKE: {"n_samples": 200, "noise": 0.1},
    SyntheticKind.LINEARLY_SEPARABLE: {"n_samples": 200, "n_features": 2, "margin": 0.1},
}


def synthetic_params(kind: str, params: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """Defaults of the kind updated with params, unknown keys raise ValueError."""
    SyntheticKind.check(kind, "synthetic kind")
    merged = dict(SYNTHETIC_DEFAULTS[kind])
    params = dict(params or {})
    unknown = sorted(set(params) - set(merged))
    if unknown:
        raise ValueError(f"Unknown {kind} parameter(s) {unknown}, allowed: {sorted(merged)}")
    merged.update(params)
    if merged["n_samples"] < 1:
        raise ValueError(f"n_samples must be >= 1 but is {merged['n_samples']}")
    return merged


def make_synthetic(
    kind: str, params: Optional[Mapping[str, Any]] = None, rng: SeedOrRng = None
) -> Dataset:
    p = synthetic_params(kind, params)
    rng = ensure_rng(rng)
    n = int(p["n_samples"])
    if kind == SyntheticKind.PROTOTYPE_MIXTURE:
        return _prototype_mixture(n, int(p["n_visible"]), int(p["n_prototypes"]), p["flip"], rng)
    if kind == SyntheticKind.TWO_MOONS_LIKE:
        return _two_moons(n, float(p["noise"]), rng)
    return _linearly_separable(n, int(p["n_features"]), float(p["margin"]), rng)


def _prototype_mixture(
    n: int, n_visible: int, n_prototypes: int, flip: float, rng: np.random.Generator
) -> Dataset:
    if not 0 <= flip <= 0.5:
        raise ValueError(f"flip must be in [0, 0.5] but is {flip}")
    prototypes = (rng.random((n_prototypes, n_visible)) < 0.5).astype(np.float64)
    labels = rng.integers(0, n_prototypes, size=n)
    noise = rng.random((n, n_visible)) < flip
    features = np.abs(prototypes[labels] - noise)
    return Dataset(
        features,
        labels,
        FeatureKind.BINARY,
        "prototype-mixture",
        n_classes=n_prototypes,
        meta={"prototypes": prototypes, "flip": flip},
    )


def _two_moons(n: int, noise: float, rng: np.random.Generator) -> Dataset:
    labels = rng.integers(0, 2, size=n)
    angle = rng.uniform(0, np.pi, size=n)
    x = np.where(labels == 0, np.cos(angle), 1 - np.cos(angle))
    y = np.where(labels == 0, np.sin(angle), 0.5 - np.sin(angle))
    features = np.stack([x, y], axis=1) + rng.normal(0, noise, size=(n, 2))
    return Dataset(features, labels, FeatureKind.REAL, "two-moons-like", n_classes=2)


def _linearly_separable(
    n: int, n_features: int, margin: float, rng: np.random.Generator
) -> Dataset:
    if margin < 0:
        raise ValueError(f"margin must be >= 0 but is {margin}")
    normal = rng.normal(size=n_features)
    normal /= np.linalg.norm(normal)
    points = []
    n_found = 0
    while n_found < n:
        cand = rng.uniform(-1, 1, size=(2 * (n - n_found) + 16, n_features))
        cand = cand[np.abs(cand @ normal) >= margin]
        points.append(cand[: n - n_found])
        n_found += points[-1].shape[0]
    features = np.concatenate(points, axis=0)
    labels = (features @ normal > 0).astype(np.int64)
    return Dataset(
        features,
        labels,
        FeatureKind.REAL,
        "linearly-separable",
        n_classes=2,
        meta={"normal": normal, "offset": 0.0, "margin": margin},
    )
