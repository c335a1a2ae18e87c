"""Per-visible-neuron degree maps of the first layer, reshaped to the input image."""

from __future__ import annotations

from pathlib import Path
from typing import Tuple

import numpy as np
from attrs import define, field
from loguru import logger

from setnet.consts import Side
from setnet.errors import ShapeMismatchError
from setnet.sparse.topology import SparseWeights, degree_distribution
from setnet.typext import PathType


@define
class ConnectivityMap:
    grid: np.ndarray = field(converter=lambda g: np.asarray(g, dtype=np.int64))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.grid.shape

    @property
    def total_degree(self) -> int:
        return int(self.grid.sum())

    def region_means(self, center_size: int, border_width: int) -> Tuple[float, float]:
        """
        Mean degree of the centered center_size x center_size block and of the outer frame
        border_width pixels wide.
        """
        h, w = self.shape
        if center_size > min(h, w) or 2 * border_width >= min(h, w):
            raise ShapeMismatchError(
                f"Regions center={center_size} border={border_width} do not fit a {h}x{w} map"
            )
        top, left = (h - center_size) // 2, (w - center_size) // 2
        center = self.grid[top : top + center_size, left : left + center_size]
        frame = np.ones(self.shape, dtype=bool)
        frame[border_width : h - border_width, border_width : w - border_width] = False
        return float(center.mean()), float(self.grid[frame].mean())

    def to_text(self) -> str:
        return "\n".join(" ".join(str(v) for v in row) for row in self.grid) + "\n"

    def write_text(self, file: PathType) -> Path:
        file = Path(file)
        file.parent.mkdir(parents=True, exist_ok=True)
        file.write_text(self.to_text(), encoding="utf-8")
        return file

    def to_gray8(self) -> np.ndarray:
        """Degrees linearly rescaled to 0..255, a constant map is all zeros."""
        lo, hi = self.grid.min(), self.grid.max()
        if hi == lo:
            return np.zeros(self.shape, dtype=np.uint8)
        scaled = (self.grid - lo) * 255.0 / (hi - lo)
        return np.round(scaled).astype(np.uint8)

    def write_pgm(self, file: PathType) -> Path:
        """Binary 8-bit PGM (P5)."""
        file = Path(file)
        file.parent.mkdir(parents=True, exist_ok=True)
        h, w = self.shape
        with file.open("wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(self.to_gray8().tobytes())
        return file

    @classmethod
    def read_text(cls, file: PathType) -> ConnectivityMap:
        rows = [
            [int(v) for v in line.split()]
            for line in Path(file).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        return cls(np.array(rows))


def visible_connectivity_map(w: SparseWeights, height: int, width: int) -> ConnectivityMap:
    """Degree of every input neuron reshaped row-major to (height, width)."""
    if height * width != w.n_in:
        raise ShapeMismatchError(f"Map shape ({height}, {width}) does not match n_in={w.n_in}")
    degrees = degree_distribution(w, Side.INPUT)
    cmap = ConnectivityMap(degrees.reshape(height, width))
    logger.debug(f"Connectivity map {height}x{width}: degrees {degrees.min()}..{degrees.max()}")
    return cmap
