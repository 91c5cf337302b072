"""Frontier-based exploration goal selection.

A frontier cell is a free cell with at least one unknown 8-neighbor;
frontiers are their 8-connected components, small ones discarded. The
next exploration goal is the frontier minimizing straight-line distance
divided by component size (near and large beats far and small), snapped
to the frontier cell closest to the component centroid so the goal is
always in known-free space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .local_planner import NavGoal
from .types import FREE, UNKNOWN, Pose2D, TriStateMap


@dataclass
class Frontier:
    cells: np.ndarray       # (n, 2) array of (ix, iy) grid indices
    centroid: Pose2D        # world coordinates of the mean frontier cell
    size: int


def frontier_mask(tri: TriStateMap) -> np.ndarray:
    """Boolean mask of free cells touching unknown space (8-connectivity)."""
    free = tri.cells == FREE
    unknown = tri.cells == UNKNOWN
    near_unknown = ndimage.binary_dilation(unknown, structure=np.ones((3, 3), dtype=bool))
    return free & near_unknown


def find_frontiers(tri: TriStateMap, min_size: int = 8) -> list[Frontier]:
    mask = frontier_mask(tri)
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    out = []
    for label in range(1, count + 1):
        ys, xs = np.nonzero(labels == label)
        if len(xs) < min_size:
            continue
        cx = tri.origin.x + (xs.mean() + 0.5) * tri.resolution
        cy = tri.origin.y + (ys.mean() + 0.5) * tri.resolution
        out.append(
            Frontier(
                cells=np.column_stack((xs, ys)),
                centroid=Pose2D(cx, cy, 0.0),
                size=len(xs),
            )
        )
    return out


def rank_frontiers(frontiers: list[Frontier], robot: Pose2D) -> list[Frontier]:
    """Near-and-large first: straight-line distance divided by size."""
    return sorted(frontiers, key=lambda f: (robot.distance_to(f.centroid) / f.size, -f.size))


def select_exploration_goal(
    frontiers: list[Frontier],
    robot: Pose2D,
    tri: TriStateMap | None = None,
    xy_tolerance: float = 0.3,
    yaw_tolerance: float = 0.2,
) -> NavGoal | None:
    """Goal at the best frontier, or None when exploration is finished."""
    if not frontiers:
        return None
    best = rank_frontiers(frontiers, robot)[0]
    gx, gy = best.centroid.x, best.centroid.y
    if tri is not None:
        # snap to the frontier cell nearest the centroid: the raw centroid of a
        # concave component can land in unknown or occupied space
        centers_x = tri.origin.x + (best.cells[:, 0] + 0.5) * tri.resolution
        centers_y = tri.origin.y + (best.cells[:, 1] + 0.5) * tri.resolution
        i = int(np.argmin((centers_x - gx) ** 2 + (centers_y - gy) ** 2))
        gx, gy = float(centers_x[i]), float(centers_y[i])
    theta = math.atan2(gy - robot.y, gx - robot.x) if (gx, gy) != (robot.x, robot.y) else 0.0
    return NavGoal(Pose2D(gx, gy, theta), xy_tolerance, yaw_tolerance)
