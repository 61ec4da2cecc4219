"""Synthetic corner dataset.

Class 0 fills the box part of ``max(x1, x2) <= -eps``. Class 1 lies exactly
on the eps-offset of the corner boundary: the line x1 = eps below the axis,
the quarter circle of radius eps, and the line x2 = eps to the left. The two
classes are therefore exactly 2*eps apart.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class CornerDataset:
    points: np.ndarray  # (N, 2)
    labels: np.ndarray  # (N,) int
    eps: float
    seed: int
    n_per_class: int
    box_halfwidth: float

    def __len__(self):
        return len(self.labels)

    def params(self) -> dict:
        return {
            "eps": self.eps,
            "seed": self.seed,
            "n_per_class": self.n_per_class,
            "box_halfwidth": self.box_halfwidth,
        }


def _offset_curve(s: np.ndarray, eps: float, h: float) -> np.ndarray:
    """Map arc length s in [0, 2h + pi*eps/2] to the class-1 curve."""
    arc = 0.5 * math.pi * eps
    out = np.empty((len(s), 2))
    lower = s < h
    mid = (s >= h) & (s < h + arc)
    upper = s >= h + arc
    # x1 = eps, x2 from -h up to 0
    out[lower, 0] = eps
    out[lower, 1] = s[lower] - h
    theta = (s[mid] - h) / eps
    out[mid, 0] = eps * np.cos(theta)
    out[mid, 1] = eps * np.sin(theta)
    # rounding can leave arc points an ulp inside the circle; push them out
    arc_pts = out[mid]
    for _ in range(8):
        short = np.hypot(arc_pts[:, 0], arc_pts[:, 1]) < eps
        if not short.any():
            break
        arc_pts[short] = np.nextafter(arc_pts[short], np.copysign(np.inf, arc_pts[short]))
    out[mid] = arc_pts
    # x2 = eps, x1 from 0 down to -h
    out[upper, 0] = -(s[upper] - h - arc)
    out[upper, 1] = eps
    return out


def generate(eps: float = 0.5, n_per_class: int = 1000, seed: int = 0,
             box_halfwidth: float = 2.0) -> CornerDataset:
    if not eps > 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if not box_halfwidth > 2 * eps:
        raise ParameterError(f"box_halfwidth must exceed 2*eps, got {box_halfwidth}")
    if n_per_class < 1:
        raise ParameterError(f"n_per_class must be >= 1, got {n_per_class}")
    h = float(box_halfwidth)
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-h, -eps, size=(n_per_class, 2))
    total = 2 * h + 0.5 * math.pi * eps
    x1 = _offset_curve(rng.uniform(0.0, total, size=n_per_class), eps, h)
    points = np.concatenate([x0, x1])
    labels = np.concatenate([np.zeros(n_per_class, int), np.ones(n_per_class, int)])
    return CornerDataset(points, labels, float(eps), int(seed), int(n_per_class), h)


def save_dataset(ds: CornerDataset, path) -> None:
    """CSV ``x1,x2,label`` at 17 significant digits plus a ``.json`` sidecar."""
    path = Path(path)
    lines = ["x1,x2,label"]
    lines += [f"{p[0]:.17g},{p[1]:.17g},{int(y)}" for p, y in zip(ds.points, ds.labels)]
    path.write_text("\n".join(lines) + "\n")
    path.with_suffix(".json").write_text(json.dumps(ds.params(), indent=2, sort_keys=True) + "\n")


def read_points_csv(path):
    """Read ``x1,x2[,label]`` rows. Returns ``(points, labels or None)``.

    Raises ParameterError naming the offending line.
    """
    rows, labels = [], []
    text = Path(path).read_text().splitlines()
    if not text:
        raise ParameterError(f"{path}: empty file")
    header = [c.strip() for c in text[0].split(",")]
    if header[:2] != ["x1", "x2"]:
        raise ParameterError(f"{path}:1: expected header starting with x1,x2")
    has_label = "label" in header
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        try:
            rows.append([float(cells[0]), float(cells[1])])
            if has_label:
                labels.append(int(cells[header.index("label")]))
        except (ValueError, IndexError) as exc:
            raise ParameterError(f"{path}:{lineno}: cannot parse {line!r}") from exc
    pts = np.array(rows, dtype=np.float64).reshape(-1, 2)
    return pts, (np.array(labels, dtype=int) if has_label else None)


def load_dataset(path) -> CornerDataset:
    path = Path(path)
    points, labels = read_points_csv(path)
    if labels is None:
        raise ParameterError(f"{path}: dataset needs a label column")
    meta = json.loads(path.with_suffix(".json").read_text())
    return CornerDataset(points, labels, float(meta["eps"]), int(meta["seed"]),
                         int(meta["n_per_class"]), float(meta["box_halfwidth"]))
