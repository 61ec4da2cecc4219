"""CSV and SVG writers for masks, polylines and point sets.

SVG coordinates are the analysis coordinates with the y axis pointing up:
the viewBox spans the box and a top-level group flips y.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .contour import Box
from .masks import RegionMask
from .polyline import Polyline

STYLE = """
.neither { fill: #bdbdbd; } .robust { fill: #f28e2b; }
.certified { fill: #d62728; } .both { fill: #9ecae1; }
.boundary { stroke: #000; fill: none; }
.certified-frontier { stroke: #1f4e9e; fill: none; }
.robust-frontier { stroke: #2ca02c; fill: none; }
.level { stroke: #777; fill: none; }
.class0 { fill: #5e3c99; } .class1 { fill: #fdb863; }
"""
_MASK_CLASSES = {0: "neither", 1: "robust", 2: "certified", 3: "both"}


def mask_csv(mask: RegionMask, path) -> None:
    centers = mask.grid.centers().reshape(-1, 2)
    cert = mask.certified.reshape(-1).astype(int)
    rob = mask.robust.reshape(-1).astype(int)
    with open(path, "w") as fh:
        fh.write("x,y,certified,robust\n")
        for (x, y), c, r in zip(centers, cert, rob):
            fh.write(f"{x:.17g},{y:.17g},{c},{r}\n")


def polylines_csv(polylines, path) -> None:
    """One row per vertex: ``polyline,index,x,y,closed``."""
    with open(path, "w") as fh:
        fh.write("polyline,index,x,y,closed\n")
        for k, p in enumerate(polylines):
            for i, (x, y) in enumerate(p.vertices):
                fh.write(f"{k},{i},{x:.17g},{y:.17g},{int(p.closed)}\n")


def path_data(p: Polyline) -> str:
    v = p.vertices
    d = "M " + " L ".join(f"{x:.6g} {y:.6g}" for x, y in v)
    return d + (" Z" if p.closed else "")


class SvgFigure:
    """Minimal layered SVG builder in analysis coordinates."""

    def __init__(self, box: Box, width_px: int = 480, title: str = ""):
        self.box = box
        self.width_px = width_px
        self.title = title
        self.layers: list[str] = []
        xmin, xmax, ymin, ymax = box
        # stroke widths are in px: scale them into analysis units
        self.px = (xmax - xmin) / width_px

    def add_mask(self, mask: RegionMask) -> None:
        """Run-length encoded rectangles, one class per mask tag."""
        xmin, _, ymin, _ = mask.grid.box
        dx, dy = mask.grid.cell
        vals = mask.values
        rects = []
        for iy, row in enumerate(vals):
            starts = np.flatnonzero(np.concatenate([[True], row[1:] != row[:-1]]))
            ends = np.concatenate([starts[1:], [len(row)]])
            for s, e in zip(starts, ends):
                rects.append(
                    f'<rect class="{_MASK_CLASSES[int(row[s])]}" x="{xmin + s * dx:.6g}" '
                    f'y="{ymin + iy * dy:.6g}" width="{(e - s) * dx:.6g}" height="{dy:.6g}"/>'
                )
        self.layers.append('<g class="mask" shape-rendering="crispEdges">' + "".join(rects) + "</g>")

    def add_polylines(self, polylines, css_class: str, width_px: float = 1.5,
                      dashed: bool = False) -> None:
        paths = "".join(f'<path d="{path_data(p)}"/>' for p in polylines if len(p) >= 2)
        style = f"stroke-width:{width_px * self.px:.4g}"
        if dashed:
            style += f";stroke-dasharray:{4 * self.px:.4g} {3 * self.px:.4g}"
        self.layers.append(f'<g class="{css_class}" style="{style}">{paths}</g>')

    def add_points(self, points, labels, radius_px: float = 1.5) -> None:
        r = radius_px * self.px
        for lab in sorted(set(int(v) for v in labels)):
            pts = np.asarray(points)[np.asarray(labels) == lab]
            circles = "".join(f'<circle cx="{x:.6g}" cy="{y:.6g}" r="{r:.4g}"/>' for x, y in pts)
            self.layers.append(f'<g class="class{lab}">{circles}</g>')

    def render(self) -> str:
        xmin, xmax, ymin, ymax = self.box
        w, h = xmax - xmin, ymax - ymin
        height_px = int(round(self.width_px * h / w))
        title = f"<title>{escape(self.title)}</title>" if self.title else ""
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width_px}" height="{height_px}" '
            f'viewBox="{xmin:.6g} {-ymax:.6g} {w:.6g} {h:.6g}">{title}'
            f"<style>{STYLE}</style>"
            f'<g transform="scale(1,-1)">' + "".join(self.layers) + "</g></svg>\n"
        )

    def save(self, path) -> None:
        Path(path).write_text(self.render())
