"""Grid classification into certified / robust regions, frontiers and VRA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lipschitz import LipschitzBound
from ..network import Network, predict
from .certify import certify_global_batch
from .contour import Box, Grid, extract_level_set, field_level_set
from .oracle import BoundaryOracle, boundary_distance, corner_oracle, polyline_oracle
from .polyline import Polyline, ray_crossings

NEITHER, ROBUST, CERTIFIED, BOTH = 0, 1, 2, 3
TAG_NAMES = {NEITHER: "neither", ROBUST: "robust", CERTIFIED: "certified", BOTH: "both"}


@dataclass(frozen=True)
class RegionMask:
    grid: Grid
    certified: np.ndarray  # (res, res) bool, indexed [iy, ix]
    robust: np.ndarray
    # cells whose robust call is within the oracle tolerance of eps
    marginal: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.certified.astype(int) * 2 + self.robust.astype(int)

    def count(self, tag: int) -> int:
        return int((self.values == tag).sum())

    def area(self, tag: int) -> float:
        return self.count(tag) * self.grid.cell_area

    def unsound_cells(self) -> int:
        """Cells certified but not robust, ignoring marginal cells."""
        return int((self.certified & ~self.robust & ~self.marginal).sum())


def region_masks(net: Network, bound: LipschitzBound, oracle, eps: float,
                 box: Box, resolution: int = 512) -> RegionMask:
    grid = Grid(box, resolution)
    pts = grid.centers().reshape(-1, 2)
    shape = (resolution, resolution)
    cert = certify_global_batch(net, bound, pts, eps)["certified"].reshape(shape)
    dist = boundary_distance(oracle, pts).reshape(shape)
    tol = oracle.tolerance if isinstance(oracle, BoundaryOracle) else 0.0
    marginal = np.abs(dist - eps) <= tol if tol > 0 else np.zeros(shape, bool)
    return RegionMask(grid, cert, dist >= eps, marginal)


def decision_boundary(net: Network, box: Box, resolution: int = 512) -> list[Polyline]:
    return extract_level_set(net, 0.0, box, resolution)


def certified_frontier(net: Network, bound: LipschitzBound, eps: float,
                       box: Box, resolution: int = 512) -> list[Polyline]:
    """Level sets ``f1 - f0 = +-eps*K10`` of a binary net."""
    level = eps * bound.K(1, 0)
    return (extract_level_set(net, level, box, resolution)
            + extract_level_set(net, -level, box, resolution))


def robust_frontier(oracle: BoundaryOracle, eps: float, box: Box,
                    resolution: int = 512) -> list[Polyline]:
    """Points at distance exactly eps from the oracle's boundary (both sides)."""
    def signed(p):
        sign = np.where(np.asarray(oracle.label_of(p)) == 1, 1.0, -1.0)
        return sign * oracle.distance_of(p)
    return (field_level_set(signed, eps, box, resolution)
            + field_level_set(signed, -eps, box, resolution))


def net_oracle(net: Network, box: Box, resolution: int = 512, pad: float = 0.0) -> BoundaryOracle:
    """Oracle from the net's own extracted boundary.

    ``pad`` widens the extraction box so boundary pieces just outside ``box``
    still count; the tolerance is one cell diagonal.
    """
    xmin, xmax, ymin, ymax = box
    big = (xmin - pad, xmax + pad, ymin - pad, ymax + pad)
    lines = decision_boundary(net, big, resolution)
    tol = Grid(big, resolution).cell_diagonal
    if not lines:
        # no boundary in view: every point is as robust as the view allows
        far = lambda p: np.full(len(np.atleast_2d(p)), np.inf)  # noqa: E731
        return BoundaryOracle(lambda p: predict(net, np.atleast_2d(p)), far, tol, "polyline")
    return polyline_oracle(lines, lambda p: predict(net, np.atleast_2d(p)), tol)


def frontier_gap(a, b, origin=(0.0, 0.0), direction=(1.0, 1.0)) -> float:
    """Distance between the first crossings of two frontiers along a ray."""
    ta, tb = ray_crossings(a, origin, direction), ray_crossings(b, origin, direction)
    if len(ta) == 0 or len(tb) == 0:
        raise ValueError("ray does not cross both frontiers")
    return float(abs(ta[0] - tb[0]))


def vra(net: Network, bound: LipschitzBound, dataset, eps: float, oracle=None) -> dict:
    """Accuracy, certification and robustness fractions over a labelled dataset.

    Without an oracle, binary nets use their extracted boundary (points whose
    robust call falls within the grid tolerance are counted as ``marginal``).
    """
    x = np.asarray(dataset.points, dtype=np.float64)
    y = np.asarray(dataset.labels)
    if len(y) == 0:
        raise ValueError("dataset is empty")
    r = certify_global_batch(net, bound, x, eps)
    correct = r["predicted"] == y
    if oracle is None:
        lo, hi = x.min(axis=0), x.max(axis=0)
        oracle = net_oracle(net, (lo[0], hi[0], lo[1], hi[1]), 512, pad=eps + 0.25)
    dist = boundary_distance(oracle, x)
    robust = dist >= eps
    tol = oracle.tolerance if isinstance(oracle, BoundaryOracle) else 0.0
    return {
        "n": int(len(y)),
        "accuracy": float(correct.mean()),
        "certified_fraction": float(r["certified"].mean()),
        "vra": float((correct & r["certified"]).mean()),
        "robust_fraction": float(robust.mean()),
        "robust_but_uncertified_fraction": float((robust & ~r["certified"]).mean()),
        "marginal_fraction": float((np.abs(dist - eps) <= tol).mean()) if tol > 0 else 0.0,
    }


def corner_frontiers(eps: float, box: Box, resolution: int = 512):
    """Robust frontier of the analytic corner boundary."""
    return robust_frontier(corner_oracle(), eps, box, resolution)

