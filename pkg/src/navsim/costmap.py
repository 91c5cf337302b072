"""Planner-facing costmaps: lethal obstacles plus inflation.

Cost scale: 254 lethal (an occupied cell), 253 guaranteed-collision band
(cell center closer to a lethal cell than the blocking radius), then an
exponential decay 252*exp(-cost_scaling_factor*(d - inscribed_radius))
out to inflation_radius, and 0 beyond. Unknown cells cost 0: planning is
optimistic about unexplored space, which is what lets exploration plan
into the frontier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from .types import OCCUPIED, Pose2D, TriStateMap

LETHAL = 254
INSCRIBED = 253


@dataclass(frozen=True)
class Footprint:
    """Robot outline polygon in the base frame."""

    vertices: tuple

    @staticmethod
    def from_list(points) -> "Footprint":
        return Footprint(tuple((float(x), float(y)) for x, y in points))

    def inscribed_radius(self) -> float:
        pts = self.vertices
        r = math.inf
        for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
            ex, ey = x1 - x0, y1 - y0
            L2 = ex * ex + ey * ey
            if L2 == 0:
                d = math.hypot(x0, y0)
            else:
                t = max(0.0, min(1.0, -(x0 * ex + y0 * ey) / L2))
                d = math.hypot(x0 + t * ex, y0 + t * ey)
            r = min(r, d)
        return r

    def circumscribed_radius(self) -> float:
        return max(math.hypot(x, y) for x, y in self.vertices)


@dataclass
class Costmap:
    resolution: float
    width: int
    height: int
    origin: Pose2D
    costs: np.ndarray  # uint8, 0..254
    rolling: bool = False
    window: tuple[float, float] | None = None  # (width_m, height_m) when rolling

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        ix = int(math.floor((x - self.origin.x) / self.resolution))
        iy = int(math.floor((y - self.origin.y) / self.resolution))
        return ix, iy

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (
            self.origin.x + (ix + 0.5) * self.resolution,
            self.origin.y + (iy + 0.5) * self.resolution,
        )

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def cost_at(self, x: float, y: float, default: int = 0) -> int:
        """Cost of the cell containing a world point; `default` outside."""
        ix, iy = self.world_to_cell(x, y)
        if not self.in_bounds(ix, iy):
            return default
        return int(self.costs[iy, ix])

    def costs_at(self, xs: np.ndarray, ys: np.ndarray, default: int = 0) -> np.ndarray:
        ix = np.floor((xs - self.origin.x) / self.resolution).astype(np.int64)
        iy = np.floor((ys - self.origin.y) / self.resolution).astype(np.int64)
        inside = (ix >= 0) & (ix < self.width) & (iy >= 0) & (iy < self.height)
        out = np.full(ix.shape, default, dtype=np.int64)
        out[inside] = self.costs[iy[inside], ix[inside]]
        return out


def inflate(
    costmap: Costmap,
    inflation_radius: float,
    cost_scaling_factor: float,
    inscribed_radius: float,
) -> Costmap:
    """Spread cost outward from lethal cells by distance-based decay.

    Cells strictly inside `inscribed_radius` of the nearest lethal cell get
    253; at and beyond it the cost decays exponentially out to
    `inflation_radius`; farther cells are untouched. Distances are
    cell-center to cell-center.
    """
    if inflation_radius < inscribed_radius:
        raise ValueError("inflation_radius must be >= inscribed_radius")
    costs = costmap.costs.copy()
    lethal = costs == LETHAL
    if lethal.any():
        dist = distance_transform_edt(~lethal, sampling=costmap.resolution)
        decay = np.round(252.0 * np.exp(-cost_scaling_factor * (dist - inscribed_radius)))
        new = np.where(dist < inscribed_radius, INSCRIBED, decay).astype(np.uint8)
        band = (~lethal) & (dist <= inflation_radius)
        costs[band] = new[band]
    return Costmap(
        resolution=costmap.resolution,
        width=costmap.width,
        height=costmap.height,
        origin=costmap.origin,
        costs=costs,
        rolling=costmap.rolling,
        window=costmap.window,
    )


def build_costmap(
    tri: TriStateMap,
    footprint: Footprint,
    inflation_radius: float = 1.75,
    cost_scaling_factor: float = 2.58,
    center: Pose2D | None = None,
    window: tuple[float, float] | None = None,
) -> Costmap:
    """Costmap from a tri-state map: lethal occupied cells, then inflation.

    With `center` and `window` set, builds the rolling local view: a
    window-sized crop (grid-aligned, clamped to the map) around the robot.
    The blocking band radius is the footprint's circumscribed radius, so a
    trajectory whose center never enters cost >= 253 keeps the whole
    footprint collision-free at any heading.
    """
    res = tri.resolution
    if center is not None and window is not None:
        half_w = int(round(window[0] / res / 2))
        half_h = int(round(window[1] / res / 2))
        cx, cy = tri.world_to_cell(center.x, center.y)
        x0 = max(0, min(cx - half_w, tri.width - 2 * half_w))
        y0 = max(0, min(cy - half_h, tri.height - 2 * half_h))
        x0 = max(0, x0)
        y0 = max(0, y0)
        x1 = min(tri.width, x0 + 2 * half_w)
        y1 = min(tri.height, y0 + 2 * half_h)
        cells = tri.cells[y0:y1, x0:x1]
        origin = Pose2D(tri.origin.x + x0 * res, tri.origin.y + y0 * res, 0.0)
        rolling = True
    else:
        cells = tri.cells
        origin = tri.origin
        rolling = False
    costs = np.zeros(cells.shape, dtype=np.uint8)
    costs[cells == OCCUPIED] = LETHAL
    cm = Costmap(
        resolution=res,
        width=cells.shape[1],
        height=cells.shape[0],
        origin=origin,
        costs=costs,
        rolling=rolling,
        window=window if rolling else None,
    )
    return inflate(cm, inflation_radius, cost_scaling_factor, footprint.circumscribed_radius())
