"""Exact (or grid-toleranced) robustness oracles for 2-D classifiers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..geometry import corner_signed_distance
from .polyline import Polyline, _as_list, polyline_distance


@dataclass(frozen=True)
class BoundaryOracle:
    """A classifier given by its labels and its exact distance to the boundary.

    Both callables take an (N, 2) array. ``tolerance`` is how far
    ``distance_of`` may be from the true distance (0 for analytic oracles).
    """

    label_of: Callable[[np.ndarray], np.ndarray]
    distance_of: Callable[[np.ndarray], np.ndarray]
    tolerance: float = 0.0
    name: str = "custom"


def corner_oracle() -> BoundaryOracle:
    return BoundaryOracle(
        label_of=lambda p: (corner_signed_distance(np.atleast_2d(p)) > 0).astype(int),
        distance_of=lambda p: np.abs(corner_signed_distance(np.atleast_2d(p))),
        name="corner",
    )


def polyline_oracle(polylines, label_of, tolerance: float) -> BoundaryOracle:
    """Oracle backed by an extracted boundary; distances good to ``tolerance``."""
    polylines = _as_list(polylines)
    return BoundaryOracle(
        label_of=label_of,
        distance_of=lambda p: polyline_distance(polylines, p),
        tolerance=tolerance,
        name="polyline",
    )


def _corner_distance_rays(points: np.ndarray) -> np.ndarray:
    # the boundary is two rays from the origin: (0, t) and (t, 0) for t <= 0
    x1, x2 = points[:, 0], points[:, 1]
    to_vertical = np.hypot(x1, np.maximum(x2, 0.0))
    to_horizontal = np.hypot(x2, np.maximum(x1, 0.0))
    return np.minimum(to_vertical, to_horizontal)


def boundary_distance(boundary, x) -> np.ndarray:
    """Distance from points to ``boundary``: "corner", Polyline(s) or a BoundaryOracle."""
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if isinstance(boundary, str):
        if boundary != "corner":
            raise ValueError(f"unknown analytic boundary {boundary!r}")
        return _corner_distance_rays(pts)
    if isinstance(boundary, BoundaryOracle):
        return np.asarray(boundary.distance_of(pts), dtype=np.float64)
    if isinstance(boundary, Polyline) or isinstance(boundary, (list, tuple)):
        return polyline_distance(boundary, pts)
    raise TypeError(f"unsupported boundary {type(boundary).__name__}")


def robust_oracle(boundary, x, eps: float):
    """``(robust, distance)``: robust iff the distance to the boundary is >= eps.

    Scalars for a single point, arrays for a batch.
    """
    d = boundary_distance(boundary, x)
    robust = d >= eps
    if np.ndim(x) == 1:
        return bool(robust[0]), float(d[0])
    return robust, d
