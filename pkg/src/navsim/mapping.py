"""Occupancy-grid mapping from range scans at known poses.

Log-odds cell updates: every cell a beam crosses before its endpoint gets
l_miss, the endpoint cell gets l_hit, and no-return beams mark the full
ray out to range_max as misses. Cell traversal is exact: a cell is
updated iff the beam segment passes through its interior (corner touches
of zero length are skipped). The grid grows on demand, so the mapper
needs no prior knowledge of the environment extent.

Poses are supplied by the caller (dead-reckoning odometry in the live
stack, ground truth in calibration runs); there is no scan matching or
particle filtering here.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .types import FREE, OCCUPIED, UNKNOWN, LaserScan, OccupancyGrid, Pose2D, TriStateMap


class MapIOError(ValueError):
    pass


@dataclass(frozen=True)
class MapperConfig:
    l_hit: float = 0.85
    l_miss: float = -0.4
    l_min: float = -10.0
    l_max: float = 10.0
    occupied_threshold: float = 0.65
    free_threshold: float = 0.25
    resolution: float = 0.05

    def __post_init__(self):
        if not (self.l_miss < 0.0 < self.l_hit):
            raise ValueError("need l_miss < 0 < l_hit")
        if not (self.free_threshold < self.occupied_threshold):
            raise ValueError("need free_threshold < occupied_threshold")
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")


def occupancy_probability(log_odds):
    """Probability that a cell is occupied given its log-odds."""
    return 1.0 - 1.0 / (1.0 + np.exp(log_odds))


def traverse_cells(
    grid: OccupancyGrid, x0: float, y0: float, x1: float, y1: float
) -> list[tuple[int, int]]:
    """Ordered cells whose interior the segment (x0,y0)->(x1,y1) crosses.

    Includes the start and end cells. Zero-length corner touches are not
    visited.
    """
    res = grid.resolution
    gx0 = (x0 - grid.origin.x) / res
    gy0 = (y0 - grid.origin.y) / res
    gx1 = (x1 - grid.origin.x) / res
    gy1 = (y1 - grid.origin.y) / res
    dx, dy = gx1 - gx0, gy1 - gy0
    ix0, iy0 = math.floor(gx0), math.floor(gy0)
    ix1, iy1 = math.floor(gx1), math.floor(gy1)
    ts = [0.0, 1.0]
    if ix1 != ix0:
        lo, hi = min(ix0, ix1), max(ix0, ix1)
        ts.extend((k - gx0) / dx for k in range(lo + 1, hi + 1))
    if iy1 != iy0:
        lo, hi = min(iy0, iy1), max(iy0, iy1)
        ts.extend((k - gy0) / dy for k in range(lo + 1, hi + 1))
    ts = sorted(set(ts))
    cells = []
    for t0, t1 in zip(ts[:-1], ts[1:]):
        if t1 - t0 <= 1e-12:
            continue
        tm = 0.5 * (t0 + t1)
        cells.append((math.floor(gx0 + tm * dx), math.floor(gy0 + tm * dy)))
    return cells


class Mapper:
    """Owns the log-odds grid; integrates scans taken at known poses."""

    def __init__(self, cfg: MapperConfig = MapperConfig(), center: Pose2D = Pose2D()):
        self.cfg = cfg
        res = cfg.resolution
        ox = math.floor(center.x / res) * res - res
        oy = math.floor(center.y / res) * res - res
        self.grid = OccupancyGrid(resolution=res, width=3, height=3, origin=Pose2D(ox, oy, 0.0))

    # -- growth ---------------------------------------------------------

    def ensure_covers(self, x_min: float, y_min: float, x_max: float, y_max: float) -> None:
        g = self.grid
        res = g.resolution
        pad = 1.0  # grow in 1 m slabs to amortize reallocation
        grow_left = max(0, math.ceil((g.origin.x - (x_min - pad)) / res)) if x_min < g.origin.x else 0
        grow_down = max(0, math.ceil((g.origin.y - (y_min - pad)) / res)) if y_min < g.origin.y else 0
        right_edge = g.origin.x + g.width * res
        top_edge = g.origin.y + g.height * res
        grow_right = max(0, math.ceil(((x_max + pad) - right_edge) / res)) if x_max > right_edge else 0
        grow_up = max(0, math.ceil(((y_max + pad) - top_edge) / res)) if y_max > top_edge else 0
        if not (grow_left or grow_right or grow_down or grow_up):
            return
        new_w = g.width + grow_left + grow_right
        new_h = g.height + grow_down + grow_up
        log_odds = np.zeros((new_h, new_w), dtype=np.float64)
        observed = np.zeros((new_h, new_w), dtype=bool)
        log_odds[grow_down : grow_down + g.height, grow_left : grow_left + g.width] = g.log_odds
        observed[grow_down : grow_down + g.height, grow_left : grow_left + g.width] = g.observed
        self.grid = OccupancyGrid(
            resolution=res,
            width=new_w,
            height=new_h,
            origin=Pose2D(g.origin.x - grow_left * res, g.origin.y - grow_down * res, 0.0),
            log_odds=log_odds,
            observed=observed,
        )

    # -- scan integration -------------------------------------------------

    def integrate_scan(self, pose: Pose2D, scan: LaserScan) -> OccupancyGrid:
        """Apply one scan taken at `pose` (sensor at the pose origin)."""
        n = len(scan.ranges)
        angles = pose.theta + scan.angles
        finite = np.isfinite(scan.ranges)
        reach = np.where(finite, scan.ranges, scan.range_max)
        ex = pose.x + reach * np.cos(angles)
        ey = pose.y + reach * np.sin(angles)
        self.ensure_covers(
            min(pose.x, ex.min()), min(pose.y, ey.min()), max(pose.x, ex.max()), max(pose.y, ey.max())
        )
        g = self.grid
        res = g.resolution
        gx0 = (pose.x - g.origin.x) / res
        gy0 = (pose.y - g.origin.y) / res
        gex = (ex - g.origin.x) / res
        gey = (ey - g.origin.y) / res
        dx = gex - gx0
        dy = gey - gy0
        ix0, iy0 = math.floor(gx0), math.floor(gy0)
        iex = np.floor(gex).astype(np.int64)
        iey = np.floor(gey).astype(np.int64)

        # boundary-crossing parameters for all beams at once
        def crossings(i0: int, iend: np.ndarray, g0: float, d: np.ndarray):
            cnt = np.abs(iend - i0)
            total = int(cnt.sum())
            beam = np.repeat(np.arange(n), cnt)
            starts = np.concatenate(([0], np.cumsum(cnt)[:-1]))
            off = np.arange(total) - np.repeat(starts, cnt)
            k = np.where(iend[beam] > i0, i0 + 1 + off, i0 - off)
            t = (k - g0) / d[beam]
            return t, beam

        tx, bx = crossings(ix0, iex, gx0, dx)
        ty, by = crossings(iy0, iey, gy0, dy)
        ends = np.arange(n)
        all_t = np.concatenate((np.zeros(n), np.ones(n), tx, ty))
        all_b = np.concatenate((ends, ends, bx, by))
        order = np.lexsort((all_t, all_b))
        st = all_t[order]
        sb = all_b[order]
        same = sb[1:] == sb[:-1]
        seg_len = st[1:] - st[:-1]
        keep = same & (seg_len > 1e-12)
        mid = 0.5 * (st[1:] + st[:-1])[keep]
        beam = sb[:-1][keep]
        first = st[:-1][keep] <= 0.0  # segment starting at the sensor
        cx = np.floor(gx0 + mid * dx[beam]).astype(np.int64)
        cy = np.floor(gy0 + mid * dy[beam]).astype(np.int64)

        is_endpoint = (cx == iex[beam]) & (cy == iey[beam]) & finite[beam]
        miss_mask = ~first & ~is_endpoint
        mx, my = cx[miss_mask], cy[miss_mask]
        hx, hy = iex[finite], iey[finite]

        np.add.at(g.log_odds, (my, mx), self.cfg.l_miss)
        np.add.at(g.log_odds, (hy, hx), self.cfg.l_hit)
        np.clip(g.log_odds, self.cfg.l_min, self.cfg.l_max, out=g.log_odds)
        g.observed[my, mx] = True
        g.observed[hy, hx] = True
        return g

    def to_tristate(self) -> TriStateMap:
        return to_tristate(self.grid, self.cfg)


def integrate_scan(
    grid_or_mapper, pose: Pose2D, scan: LaserScan, cfg: MapperConfig | None = None
) -> OccupancyGrid:
    """Functional wrapper: integrate one scan and return the updated grid."""
    if isinstance(grid_or_mapper, Mapper):
        return grid_or_mapper.integrate_scan(pose, scan)
    mapper = Mapper.__new__(Mapper)
    mapper.cfg = cfg if cfg is not None else MapperConfig(resolution=grid_or_mapper.resolution)
    mapper.grid = grid_or_mapper
    return mapper.integrate_scan(pose, scan)


def to_tristate(grid: OccupancyGrid, cfg: MapperConfig) -> TriStateMap:
    """Threshold the belief into occupied / free / unknown."""
    p = occupancy_probability(grid.log_odds)
    cells = np.full((grid.height, grid.width), UNKNOWN, dtype=np.uint8)
    cells[grid.observed & (p >= cfg.occupied_threshold)] = OCCUPIED
    cells[grid.observed & (p <= cfg.free_threshold)] = FREE
    return TriStateMap(
        resolution=grid.resolution,
        width=grid.width,
        height=grid.height,
        origin=grid.origin,
        cells=cells,
    )


# -- map files -----------------------------------------------------------
#
# Portable graymap (P5, one byte per cell: 0 occupied, 254 free, 205
# unknown), image row 0 being the top (highest y) map row, plus a sidecar
# `<stem>.meta` text file with resolution, origin, width, height.


def _meta_path(path: Path) -> Path:
    return path.with_suffix(".meta")


def save_map(tri: TriStateMap, path: str | Path) -> None:
    path = Path(path)
    header = f"P5\n{tri.width} {tri.height}\n255\n".encode("ascii")
    payload = np.flipud(tri.cells).tobytes()
    path.write_bytes(header + payload)
    meta = (
        f"resolution: {tri.resolution!r}\n"
        f"origin: {tri.origin.x!r} {tri.origin.y!r} {tri.origin.theta!r}\n"
        f"width: {tri.width}\n"
        f"height: {tri.height}\n"
    )
    _meta_path(path).write_text(meta, encoding="ascii")


def load_map(path: str | Path) -> TriStateMap:
    path = Path(path)
    raw = path.read_bytes()
    m = re.match(rb"P5\n(\d+) (\d+)\n255\n", raw)
    if not m:
        raise MapIOError(f"{path}: not a P5 map file")
    width, height = int(m.group(1)), int(m.group(2))
    payload = raw[m.end() :]
    if len(payload) != width * height:
        raise MapIOError(f"{path}: expected {width * height} cells, found {len(payload)}")
    cells = np.flipud(np.frombuffer(payload, dtype=np.uint8).reshape(height, width)).copy()
    bad = set(np.unique(cells)) - {OCCUPIED, FREE, UNKNOWN}
    if bad:
        raise MapIOError(f"{path}: unexpected cell values {sorted(bad)}")
    meta_file = _meta_path(path)
    if not meta_file.exists():
        raise MapIOError(f"{meta_file}: missing metadata sidecar")
    meta: dict[str, str] = {}
    for line_no, line in enumerate(meta_file.read_text(encoding="ascii").splitlines(), start=1):
        if not line.strip():
            continue
        if ":" not in line:
            raise MapIOError(f"{meta_file}:{line_no}: expected 'key: value'")
        key, _, val = line.partition(":")
        meta[key.strip()] = val.strip()
    try:
        resolution = float(meta["resolution"])
        ox, oy, otheta = (float(v) for v in meta["origin"].split())
        mw, mh = int(meta["width"]), int(meta["height"])
    except (KeyError, ValueError) as exc:
        raise MapIOError(f"{meta_file}: {exc}") from exc
    if (mw, mh) != (width, height):
        raise MapIOError(f"{meta_file}: metadata size disagrees with image size")
    return TriStateMap(
        resolution=resolution, width=width, height=height, origin=Pose2D(ox, oy, otheta), cells=cells
    )
