from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateBoundaryError(ValueError):
    pass


@dataclass(frozen=True)
class Polyline:
    vertices: np.ndarray  # (k, 2)
    closed: bool = False

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 2)
        if len(v) > 1:
            keep = np.concatenate([[True], np.any(v[1:] != v[:-1], axis=1)])
            v = v[keep]
        if self.closed and len(v) > 2 and np.array_equal(v[0], v[-1]):
            v = v[:-1]
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.vertices
        if self.closed and len(v) > 2:
            return v, np.roll(v, -1, axis=0)
        return v[:-1], v[1:]


def _as_list(polylines) -> list[Polyline]:
    if isinstance(polylines, Polyline):
        polylines = [polylines]
    polylines = [p for p in polylines if len(p) > 0]
    if not polylines or all(len(p) < 2 for p in polylines):
        raise DegenerateBoundaryError("boundary needs at least one polyline with two vertices")
    return polylines


def _stack_segments(polylines):
    a, b = [], []
    for p in _as_list(polylines):
        if len(p) == 1:
            a.append(p.vertices)
            b.append(p.vertices)
            continue
        s, e = p.segments()
        a.append(s)
        b.append(e)
    return np.concatenate(a), np.concatenate(b)


def polyline_distance(polylines, points) -> np.ndarray:
    """Exact Euclidean distance from each point to the nearest segment."""
    a, b = _stack_segments(polylines)
    # bound the (points x segments) temporaries to a few MB
    chunk = max(1, 400_000 // len(a))
    ab = b - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    safe = np.where(ab2 > 0, ab2, 1.0)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk, None, :]
        ap = p - a[None]
        t = np.clip(np.einsum("nsj,sj->ns", ap, ab) / safe, 0.0, 1.0)
        t = np.where(ab2 > 0, t, 0.0)
        diff = ap - t[..., None] * ab[None]
        out[s:s + chunk] = np.sqrt(np.einsum("nsj,nsj->ns", diff, diff).min(axis=1))
    return out


def ray_crossings(polylines, origin, direction) -> np.ndarray:
    """Sorted distances t >= 0 at which origin + t*dir crosses any segment."""
    a, b = _stack_segments(polylines)
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    e = b - a
    denom = d[0] * e[:, 1] - d[1] * e[:, 0]
    ao = a - o
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ao[:, 0] * e[:, 1] - ao[:, 1] * e[:, 0]) / denom
        s = (ao[:, 0] * d[1] - ao[:, 1] * d[0]) / denom
    hit = (denom != 0) & (t >= 0) & (s >= 0) & (s <= 1)
    return np.sort(t[hit])
