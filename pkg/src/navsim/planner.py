"""Global path planning: 8-connected A* over costmap cell centers.

Edge cost is the Euclidean step length times (1 + destination cell cost /
256), so the planner trades path length against clearance. The octile
heuristic uses multiplier 1 (the minimum possible), which keeps it
admissible and consistent; returned plans are cost-optimal on this graph.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .costmap import INSCRIBED, Costmap
from .types import Pose2D, wrap_angle


class PlanningError(Exception):
    pass


class GoalInCollision(PlanningError):
    pass


class Unreachable(PlanningError):
    pass


@dataclass
class Plan:
    poses: list          # Pose2D waypoints at cell centers, start -> goal
    cost: float

    def __len__(self) -> int:
        return len(self.poses)


_NEIGHBORS = (
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, math.sqrt(2.0)),
    (1, -1, math.sqrt(2.0)),
    (-1, 1, math.sqrt(2.0)),
    (-1, -1, math.sqrt(2.0)),
)


def _octile(ax: int, ay: int, bx: int, by: int) -> float:
    dx, dy = abs(ax - bx), abs(ay - by)
    return (dx + dy) + (math.sqrt(2.0) - 2.0) * min(dx, dy)


def plan_global(costmap: Costmap, start: Pose2D, goal: Pose2D) -> Plan:
    """Optimal 8-connected path from start to goal over the costmap.

    Cells with cost >= 253 are not traversable. Raises GoalInCollision if
    the goal cell is blocked, Unreachable if no path exists.
    """
    sx, sy = costmap.world_to_cell(start.x, start.y)
    gx, gy = costmap.world_to_cell(goal.x, goal.y)
    if not costmap.in_bounds(sx, sy):
        raise PlanningError("start outside the costmap")
    if not costmap.in_bounds(gx, gy):
        raise Unreachable("goal outside the costmap")
    costs = costmap.costs
    if costs[sy, sx] >= INSCRIBED:
        raise PlanningError("start in collision")
    if costs[gy, gx] >= INSCRIBED:
        raise GoalInCollision("goal in collision")
    res = costmap.resolution
    if (sx, sy) == (gx, gy):
        return Plan(poses=[Pose2D(*costmap.cell_center(gx, gy), goal.theta)], cost=0.0)

    width, height = costmap.width, costmap.height
    g_score = {(sx, sy): 0.0}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    tie = 0
    heap = [(_octile(sx, sy, gx, gy) * res, tie, sx, sy)]
    closed = set()
    while heap:
        _, _, x, y = heapq.heappop(heap)
        if (x, y) in closed:
            continue
        if (x, y) == (gx, gy):
            break
        closed.add((x, y))
        base = g_score[(x, y)]
        for dx, dy, step in _NEIGHBORS:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < width and 0 <= ny < height):
                continue
            c = costs[ny, nx]
            if c >= INSCRIBED:
                continue
            ng = base + step * res * (1.0 + c / 256.0)
            if ng < g_score.get((nx, ny), math.inf):
                g_score[(nx, ny)] = ng
                came[(nx, ny)] = (x, y)
                tie += 1
                heapq.heappush(heap, (ng + _octile(nx, ny, gx, gy) * res, tie, nx, ny))
    else:
        raise Unreachable("no path to goal")
    if (gx, gy) not in g_score:
        raise Unreachable("no path to goal")

    cells = [(gx, gy)]
    while cells[-1] != (sx, sy):
        cells.append(came[cells[-1]])
    cells.reverse()
    poses = []
    for i, (cx, cy) in enumerate(cells):
        wx, wy = costmap.cell_center(cx, cy)
        if i + 1 < len(cells):
            nx, ny = cells[i + 1]
            theta = math.atan2(ny - cy, nx - cx)
        else:
            theta = goal.theta
        poses.append(Pose2D(wx, wy, wrap_angle(theta)))
    return Plan(poses=poses, cost=g_score[(gx, gy)])
