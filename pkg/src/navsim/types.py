"""Shared domain types used across the stack.

All navigation math is planar: poses are (x, y, theta) with theta kept in
(-pi, pi]. A scalar z is carried only by frame transforms (the camera sits
1 m above the base) and never enters the motion equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TAU = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    r = math.remainder(theta, TAU)
    if r <= -math.pi:
        r += TAU
    return r


@dataclass(frozen=True)
class Pose2D:
    """Planar pose: position in meters, heading in radians."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def normalized(self) -> "Pose2D":
        return Pose2D(self.x, self.y, wrap_angle(self.theta))

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def heading_error_to(self, other_theta: float) -> float:
        """Signed smallest rotation from self.theta to other_theta."""
        return wrap_angle(other_theta - self.theta)


@dataclass(frozen=True)
class Twist:
    """Velocity command: forward linear speed and yaw rate."""

    linear: float = 0.0
    angular: float = 0.0


@dataclass
class LaserScan:
    """Planar range scan. Sentinel for no-return beams is math.inf."""

    angle_min: float
    angle_max: float
    angle_increment: float
    range_min: float
    range_max: float
    ranges: np.ndarray
    stamp: float = 0.0

    def __post_init__(self):
        self.ranges = np.asarray(self.ranges, dtype=float)
        expected = math.floor((self.angle_max - self.angle_min) / self.angle_increment + 1e-9) + 1
        if len(self.ranges) != expected:
            raise ValueError(
                f"scan has {len(self.ranges)} ranges, geometry implies {expected}"
            )
        finite = self.ranges[np.isfinite(self.ranges)]
        if finite.size and (finite.min() < self.range_min - 1e-9 or finite.max() > self.range_max + 1e-9):
            raise ValueError("finite ranges outside [range_min, range_max]")

    @property
    def angles(self) -> np.ndarray:
        return self.angle_min + self.angle_increment * np.arange(len(self.ranges))


@dataclass
class OccupancyGrid:
    """Log-odds occupancy belief over a regular grid.

    ``origin`` is the world pose of the lower-left corner of cell (0, 0);
    cell (ix, iy) spans ``[origin + i*res, origin + (i+1)*res)`` on each axis.
    Grids are axis-aligned: origin.theta must be 0.
    ``observed`` tracks which cells have ever been updated, so a cell whose
    hits and misses cancel to exactly 0 log-odds is still distinguishable
    from a never-seen cell.
    """

    resolution: float
    width: int
    height: int
    origin: Pose2D = field(default_factory=Pose2D)
    log_odds: np.ndarray | None = None
    observed: np.ndarray | None = None

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")
        if self.origin.theta != 0.0:
            raise ValueError("only axis-aligned grids are supported")
        if self.log_odds is None:
            self.log_odds = np.zeros((self.height, self.width), dtype=np.float64)
        if self.observed is None:
            self.observed = np.zeros((self.height, self.width), dtype=bool)

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


# Tri-state cell codes, also the byte values used by the PGM map format.
OCCUPIED = 0
FREE = 254
UNKNOWN = 205


@dataclass
class TriStateMap:
    """Thresholded view of an occupancy grid: occupied / free / unknown."""

    resolution: float
    width: int
    height: int
    origin: Pose2D
    cells: np.ndarray  # uint8 codes, shape (height, width)

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.uint8)
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cell array shape does not match width/height")

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
