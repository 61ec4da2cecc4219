"""Level sets of 2-D scalar fields as polylines.

Fields are sampled on the nodes of a ``resolution x resolution`` cell grid
over ``box = (xmin, xmax, ymin, ymax)``; arrays are indexed ``[iy, ix]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from skimage import measure

from ..network import Network, signed_margin
from .polyline import Polyline

Box = tuple[float, float, float, float]


@dataclass(frozen=True)
class Grid:
    box: Box
    resolution: int

    def __post_init__(self):
        xmin, xmax, ymin, ymax = self.box
        if not (xmax > xmin and ymax > ymin):
            raise ValueError(f"empty box {self.box}")
        if self.resolution < 1:
            raise ValueError("resolution must be positive")

    @property
    def cell(self) -> tuple[float, float]:
        xmin, xmax, ymin, ymax = self.box
        return (xmax - xmin) / self.resolution, (ymax - ymin) / self.resolution

    @property
    def cell_diagonal(self) -> float:
        return math.hypot(*self.cell)

    @property
    def cell_area(self) -> float:
        dx, dy = self.cell
        return dx * dy

    def nodes(self) -> np.ndarray:
        """(res+1, res+1, 2) node coordinates."""
        xmin, xmax, ymin, ymax = self.box
        xs = np.linspace(xmin, xmax, self.resolution + 1)
        ys = np.linspace(ymin, ymax, self.resolution + 1)
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)

    def centers(self) -> np.ndarray:
        """(res, res, 2) cell-center coordinates."""
        xmin, xmax, ymin, ymax = self.box
        dx, dy = self.cell
        xs = xmin + dx * (np.arange(self.resolution) + 0.5)
        ys = ymin + dy * (np.arange(self.resolution) + 0.5)
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)


def contours_of(values: np.ndarray, level: float, grid: Grid) -> list[Polyline]:
    """Marching squares on node values shaped ``(res+1, res+1)``."""
    xmin, _, ymin, _ = grid.box
    dx, dy = grid.cell
    out = []
    for c in measure.find_contours(np.asarray(values, dtype=np.float64), level):
        closed = len(c) > 2 and np.array_equal(c[0], c[-1])
        xy = np.column_stack([xmin + c[:, 1] * dx, ymin + c[:, 0] * dy])
        p = Polyline(xy, closed=closed)
        if len(p) >= 2:
            out.append(p)
    return out


def field_level_set(fn, level: float, box: Box, resolution: int = 512) -> list[Polyline]:
    """Level set of a vectorized scalar function of (N, 2) points."""
    grid = Grid(box, resolution)
    nodes = grid.nodes()
    vals = np.asarray(fn(nodes.reshape(-1, 2))).reshape(nodes.shape[:2])
    return contours_of(vals, level, grid)


def extract_level_set(net: Network, level: float, box: Box, resolution: int = 512) -> list[Polyline]:
    """Polylines approximating ``{x : f1(x) - f0(x) = level}`` for a binary net."""
    if resolution < 16:
        raise ValueError("resolution must be >= 16")
    return field_level_set(lambda p: signed_margin(net, p), level, box, resolution)
