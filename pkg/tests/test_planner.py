import heapq
import math

import numpy as np
import pytest

from navsim.costmap import Costmap
from navsim.planner import GoalInCollision, PlanningError, Unreachable, plan_global
from navsim.types import Pose2D

RES = 0.05


def costmap_from(costs):
    costs = np.asarray(costs, dtype=np.uint8)
    h, w = costs.shape
    return Costmap(resolution=RES, width=w, height=h, origin=Pose2D(0, 0, 0), costs=costs)


def center(cm, ix, iy):
    x, y = cm.cell_center(ix, iy)
    return Pose2D(x, y, 0.0)


def dijkstra_cost(costs: np.ndarray, start, goal) -> float:
    """Oracle: plain Dijkstra over the identical 8-connected graph."""
    h, w = costs.shape
    dist = {start: 0.0}
    heap = [(0.0, start)]
    visited = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in visited:
            continue
        if node == goal:
            return d
        visited.add(node)
        x, y = node
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nx, ny = x + dx, y + dy
                if not (0 <= nx < w and 0 <= ny < h):
                    continue
                c = costs[ny, nx]
                if c >= 253:
                    continue
                step = math.sqrt(dx * dx + dy * dy) * RES * (1.0 + c / 256.0)
                nd = d + step
                if nd < dist.get((nx, ny), math.inf):
                    dist[(nx, ny)] = nd
                    heapq.heappush(heap, (nd, (nx, ny)))
    return math.inf


def test_free_grid_diagonal():
    cm = costmap_from(np.zeros((3, 3)))
    plan = plan_global(cm, center(cm, 0, 0), center(cm, 2, 2))
    assert plan.cost == pytest.approx(2 * math.sqrt(2) * RES, abs=1e-12)
    assert plan.cost == pytest.approx(dijkstra_cost(cm.costs, (0, 0), (2, 2)), abs=1e-12)
    assert len(plan.poses) == 3


def test_lethal_center_forces_detour():
    costs = np.zeros((3, 3))
    costs[1, 1] = 254
    cm = costmap_from(costs)
    plan = plan_global(cm, center(cm, 0, 0), center(cm, 2, 2))
    free = dijkstra_cost(np.zeros((3, 3), dtype=np.uint8), (0, 0), (2, 2))
    assert plan.cost == pytest.approx(dijkstra_cost(cm.costs, (0, 0), (2, 2)), abs=1e-12)
    assert plan.cost > free
    for pose in plan.poses:
        assert cm.world_to_cell(pose.x, pose.y) != (1, 1)


def test_goal_equals_start():
    cm = costmap_from(np.zeros((5, 5)))
    plan = plan_global(cm, center(cm, 2, 2), center(cm, 2, 2))
    assert plan.cost == 0.0
    assert len(plan.poses) == 1


def test_goal_in_collision_raises():
    costs = np.zeros((5, 5))
    costs[3, 3] = 253
    cm = costmap_from(costs)
    with pytest.raises(GoalInCollision, match="collision"):
        plan_global(cm, center(cm, 0, 0), center(cm, 3, 3))


def test_unreachable_goal_raises():
    costs = np.zeros((7, 7))
    costs[:, 3] = 254  # full wall
    cm = costmap_from(costs)
    with pytest.raises(Unreachable):
        plan_global(cm, center(cm, 0, 0), center(cm, 6, 6))


def test_start_in_collision_raises():
    costs = np.zeros((5, 5))
    costs[0, 0] = 254
    cm = costmap_from(costs)
    with pytest.raises(PlanningError):
        plan_global(cm, center(cm, 0, 0), center(cm, 3, 3))


def test_consecutive_poses_are_grid_adjacent():
    rng = np.random.default_rng(4)
    costs = (rng.random((30, 30)) < 0.2).astype(np.uint8) * 254
    costs[5, 5] = 0
    costs[25, 20] = 0
    cm = costmap_from(costs)
    try:
        plan = plan_global(cm, center(cm, 5, 5), center(cm, 20, 25))
    except Unreachable:
        pytest.skip("random map happened to be disconnected")
    cells = [cm.world_to_cell(p.x, p.y) for p in plan.poses]
    for (ax, ay), (bx, by) in zip(cells, cells[1:]):
        assert max(abs(ax - bx), abs(ay - by)) == 1


def random_costmap(rng):
    """20x20 map mixing lethal blobs and graded inflation-like costs."""
    costs = np.zeros((20, 20), dtype=np.uint8)
    n_blobs = rng.integers(2, 7)
    for _ in range(n_blobs):
        x, y = rng.integers(0, 20, 2)
        costs[max(0, y - 1) : y + 2, max(0, x - 1) : x + 2] = 254
    graded = rng.integers(0, 253, size=(20, 20)).astype(np.uint8)
    mask = rng.random((20, 20)) < 0.4
    costs = np.where((costs == 0) & mask, graded, costs).astype(np.uint8)
    return costs


def test_astar_matches_dijkstra_on_seeded_maps():
    rng = np.random.default_rng(99)
    checked = 0
    for _ in range(30):
        costs = random_costmap(rng)
        sx, sy = int(rng.integers(0, 20)), int(rng.integers(0, 20))
        gx, gy = int(rng.integers(0, 20)), int(rng.integers(0, 20))
        if costs[sy, sx] >= 253 or costs[gy, gx] >= 253:
            continue
        cm = costmap_from(costs)
        oracle = dijkstra_cost(costs, (sx, sy), (gx, gy))
        try:
            plan = plan_global(cm, center(cm, sx, sy), center(cm, gx, gy))
        except Unreachable:
            assert math.isinf(oracle)
            continue
        assert plan.cost == pytest.approx(oracle, abs=1e-9)
        checked += 1
    assert checked >= 15


def test_plan_cost_equals_sum_of_edge_costs():
    rng = np.random.default_rng(7)
    costs = random_costmap(rng)
    costs[0, 0] = 0
    costs[19, 19] = 0
    cm = costmap_from(costs)
    try:
        plan = plan_global(cm, center(cm, 0, 0), center(cm, 19, 19))
    except Unreachable:
        pytest.skip("disconnected")
    cells = [cm.world_to_cell(p.x, p.y) for p in plan.poses]
    total = 0.0
    for (ax, ay), (bx, by) in zip(cells, cells[1:]):
        step = math.hypot(bx - ax, by - ay) * RES
        total += step * (1.0 + costs[by, bx] / 256.0)
    assert plan.cost == pytest.approx(total, abs=1e-9)
