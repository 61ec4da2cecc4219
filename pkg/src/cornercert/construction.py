"""Distance-field classifier: f'(x) = d(x) * onehot(F(x)).

For any boundary oracle this classifier has the same decisions as the
oracle, every class-pair difference is 1-Lipschitz, and certifying with
K = 1 accepts exactly the points at distance >= eps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certifier.oracle import BoundaryOracle


@dataclass(frozen=True)
class DistanceFieldClassifier:
    oracle: BoundaryOracle
    num_classes: int

    def logits(self, x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        d = np.asarray(self.oracle.distance_of(pts), dtype=np.float64)
        lab = np.asarray(self.oracle.label_of(pts), dtype=int)
        out = np.zeros((len(pts), self.num_classes))
        out[np.arange(len(pts)), lab] = d
        return out[0] if np.ndim(x) == 1 else out

    def predict(self, x):
        # on the boundary every logit is 0, so defer to the oracle label there
        labels = np.asarray(self.oracle.label_of(np.atleast_2d(x)), dtype=int)
        return int(labels[0]) if np.ndim(x) == 1 else labels


def build(oracle: BoundaryOracle, m: int = 2) -> DistanceFieldClassifier:
    if m < 2:
        raise ValueError("need at least two classes")
    return DistanceFieldClassifier(oracle, m)


def verify_pairwise_lipschitz(fc: DistanceFieldClassifier, n_pairs: int = 100_000, seed: int = 0,
                              box=(-2.0, 2.0, -2.0, 2.0), pairs=None) -> float:
    """Largest observed |d(f'_j - f'_i)| / |dx| over sampled pairs and all class pairs.

    ``pairs`` may supply explicit ``(x, x')`` arrays instead of sampling.
    """
    if pairs is None:
        if n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")
        rng = np.random.default_rng(seed)
        xmin, xmax, ymin, ymax = box
        lo, hi = np.array([xmin, ymin]), np.array([xmax, ymax])
        a = rng.uniform(lo, hi, size=(n_pairs, 2))
        b = rng.uniform(lo, hi, size=(n_pairs, 2))
    else:
        a, b = (np.atleast_2d(np.asarray(p, dtype=np.float64)) for p in pairs)
    dx = np.linalg.norm(a - b, axis=1)
    keep = dx > 0
    a, b, dx = a[keep], b[keep], dx[keep]
    fa, fb = fc.logits(a), fc.logits(b)
    worst = 0.0
    for j in range(fc.num_classes):
        for i in range(fc.num_classes):
            if i != j:
                num = np.abs((fa[:, j] - fa[:, i]) - (fb[:, j] - fb[:, i]))
                worst = max(worst, float(np.max(num / dx, initial=0.0)))
    return worst


def certify_distance_field(fc: DistanceFieldClassifier, x, eps: float):
    """Lipschitz certification of f' with K_ji = 1 for every pair."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    logits = np.atleast_2d(fc.logits(x))
    j = np.atleast_1d(fc.predict(np.atleast_2d(x)))
    rows = np.arange(len(logits))
    slack = logits[rows, j][:, None] - logits - eps * 1.0
    slack[rows, j] = np.inf
    ok = slack.min(axis=1) >= 0
    return bool(ok[0]) if np.ndim(x) == 1 else ok
