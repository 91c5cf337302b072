import math

import numpy as np
import pytest

from navsim.costmap import INSCRIBED, LETHAL, Costmap, Footprint, build_costmap, inflate
from navsim.types import FREE, OCCUPIED, UNKNOWN, Pose2D, TriStateMap

FOOTPRINT = Footprint.from_list([[-0.1, -0.1], [-0.1, 0.1], [0.1, 0.1], [0.1, -0.1]])
RES = 0.05


def empty_costmap(n=60, resolution=RES):
    return Costmap(
        resolution=resolution,
        width=n,
        height=n,
        origin=Pose2D(0, 0, 0),
        costs=np.zeros((n, n), dtype=np.uint8),
    )


def tri_map(cells):
    h, w = cells.shape
    return TriStateMap(resolution=RES, width=w, height=h, origin=Pose2D(0, 0, 0), cells=cells)


def test_footprint_radii():
    assert FOOTPRINT.inscribed_radius() == pytest.approx(0.1)
    assert FOOTPRINT.circumscribed_radius() == pytest.approx(math.hypot(0.1, 0.1))


def test_inflate_exact_values_along_a_row():
    cm = empty_costmap(81)
    cm.costs[40, 40] = LETHAL
    out = inflate(cm, inflation_radius=1.75, cost_scaling_factor=2.58, inscribed_radius=0.1)
    r_ins = 0.1
    for j in range(41, 81):
        d = (j - 40) * RES
        got = out.costs[40, j]
        if d < r_ins:
            assert got == INSCRIBED
        elif d <= 1.75:
            expected = round(252.0 * math.exp(-2.58 * (d - r_ins)))
            assert got == expected
        else:
            assert got == 0
    # exactly at the inscribed radius the decay formula applies: 252
    assert out.costs[40, 42] == 252  # d = 0.10 == inscribed radius
    assert out.costs[40, 41] == INSCRIBED  # d = 0.05 < inscribed radius


def test_cells_beyond_inflation_radius_untouched():
    cm = empty_costmap(81)
    cm.costs[40, 40] = LETHAL
    before = cm.costs.copy()
    out = inflate(cm, 1.75, 2.58, 0.1)
    ys, xs = np.mgrid[0:81, 0:81]
    d = np.hypot(ys - 40, xs - 40) * RES
    far = d > 1.75
    assert np.array_equal(out.costs[far], before[far])
    # a cell at 2.0 m stays free
    j = 40 + int(2.0 / RES)
    assert out.costs[40, j] == 0


def test_inflation_monotone_non_increasing_with_distance():
    rng = np.random.default_rng(21)
    for _ in range(50):
        cm = empty_costmap(40)
        n_obst = rng.integers(1, 6)
        ys = rng.integers(0, 40, n_obst)
        xs = rng.integers(0, 40, n_obst)
        cm.costs[ys, xs] = LETHAL
        out = inflate(cm, 1.75, 2.58, 0.1)
        from scipy.ndimage import distance_transform_edt

        dist = distance_transform_edt(cm.costs != LETHAL, sampling=RES)
        d = dist.ravel()
        c = out.costs.ravel().astype(int)
        order = np.argsort(d, kind="stable")
        # non-increasing cost as distance grows (ties may share a value)
        ds, cs = d[order], c[order]
        for i in range(1, len(ds)):
            if ds[i] > ds[i - 1] + 1e-12:
                assert cs[i] <= cs[: i][ds[: i] >= ds[i] - 1e-12].min(initial=255)
        assert (out.costs[dist > 1.75] == cm.costs[dist > 1.75]).all()
        inside = (dist < 0.1) & (cm.costs != LETHAL)
        assert (out.costs[inside] == INSCRIBED).all()


def test_build_costmap_empty_map_is_all_zero():
    cells = np.full((40, 40), FREE, dtype=np.uint8)
    cm = build_costmap(tri_map(cells), FOOTPRINT)
    assert (cm.costs == 0).all()


def test_build_costmap_single_occupied_cell():
    cells = np.full((60, 60), FREE, dtype=np.uint8)
    cells[30, 30] = OCCUPIED
    cm = build_costmap(tri_map(cells), FOOTPRINT)
    assert cm.costs[30, 30] == LETHAL
    # neighbors: d = 0.05 m < circumscribed radius 0.1414 -> blocked band
    assert cm.costs[30, 31] == INSCRIBED
    assert cm.costs[31, 31] == INSCRIBED  # diagonal, d = 0.0707
    # beyond the band the decay applies
    d = 4 * RES
    expected = round(252.0 * math.exp(-2.58 * (d - FOOTPRINT.circumscribed_radius())))
    assert cm.costs[30, 34] == expected
    # lethal cells are exactly the occupied cells
    assert np.array_equal(cm.costs == LETHAL, cells == OCCUPIED)


def test_unknown_cells_cost_zero_without_inflation_sources():
    cells = np.full((40, 40), UNKNOWN, dtype=np.uint8)
    cm = build_costmap(tri_map(cells), FOOTPRINT)
    assert (cm.costs == 0).all()


def test_local_window_dimensions_and_origin():
    cells = np.full((300, 300), FREE, dtype=np.uint8)
    tri = tri_map(cells)
    center = Pose2D(7.5, 7.5, 0.0)
    cm = build_costmap(tri, FOOTPRINT, center=center, window=(6.0, 6.0))
    assert (cm.width, cm.height) == (120, 120)
    assert cm.rolling
    # window is centered on the robot cell
    cx, cy = cm.world_to_cell(center.x, center.y)
    assert abs(cx - 60) <= 1 and abs(cy - 60) <= 1


def test_local_window_clamps_at_map_edge():
    cells = np.full((200, 200), FREE, dtype=np.uint8)
    cm = build_costmap(tri_map(cells), FOOTPRINT, center=Pose2D(0.1, 0.1, 0), window=(6.0, 6.0))
    assert (cm.width, cm.height) == (120, 120)
    assert cm.origin.x == pytest.approx(0.0)


def test_cost_lookup_vectorized_matches_scalar():
    cells = np.full((60, 60), FREE, dtype=np.uint8)
    cells[10:20, 30:40] = OCCUPIED
    cm = build_costmap(tri_map(cells), FOOTPRINT)
    rng = np.random.default_rng(2)
    xs = rng.uniform(-1, 4, 50)
    ys = rng.uniform(-1, 4, 50)
    vec = cm.costs_at(xs, ys, default=7)
    for x, y, v in zip(xs, ys, vec):
        assert cm.cost_at(x, y, default=7) == v
