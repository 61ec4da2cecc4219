"""Closed-form quantities for an orthogonal corner in the decision boundary.

The running example is the 2-D boundary ``max(x1, x2) = 0``: class 1 on the
side where the max is positive, class 0 where it is negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CornerSpec:
    d: int
    eps: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")


def corner_ratio(d: int) -> float:
    """Volume of the radius-eps ball orthant over the volume of the eps-cube.

    Equals pi^(d/2) / Gamma(d/2 + 1) / 2^d; eps cancels. Evaluated in log
    space so large d does not overflow.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    log_r = 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0) - d * math.log(2.0)
    # log-space rounding can land a hair above 1 at d = 1
    return min(1.0, math.exp(log_r))


def corner_diagonal(spec: CornerSpec) -> float:
    return math.sqrt(spec.d) * spec.eps


def corner_uncertified_area_2d(eps: float) -> float:
    """Area of robust-but-uncertified points opposite a 90 degree corner.

    The eps-square at the corner minus the quarter disc of radius eps.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    return eps * eps * (1.0 - math.pi / 4.0)


def corner_signed_distance(x) -> np.ndarray | float:
    """Signed Euclidean distance to ``max(x1, x2) = 0``; positive on the class-1 side."""
    p = np.asarray(x, dtype=np.float64)
    x1, x2 = p[..., 0], p[..., 1]
    out = np.where(
        (x1 > 0) & (x2 > 0),
        np.hypot(x1, x2),
        np.maximum(x1, x2),
    )
    return float(out) if out.ndim == 0 else out
