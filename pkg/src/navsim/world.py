"""Deterministic 2D world simulator.

Stands in for the physical base and the test room: kinematic ground truth
driven by commanded wheel speeds, per-wheel encoder emulation (one event
per 1/36-revolution boundary, stamped at the exact crossing time), a
planar ray-cast range scan standing in for the depth camera, and person
beacons for the frontal face-detection proxy.

Everything is seeded and driven by a logical clock, so identical scenario
+ command stream + seed reproduces a bit-identical event stream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .drive import EncoderEvent, Wheel
from .odometry import arc_step, icc, center_velocity
from .types import LaserScan, Pose2D, Twist, wrap_angle


class ScenarioError(ValueError):
    pass


# -- geometry ---------------------------------------------------------------


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, min corner plus size."""

    x: float
    y: float
    width: float
    height: float

    @property
    def x1(self) -> float:
        return self.x + self.width

    @property
    def y1(self) -> float:
        return self.y + self.height

    def distance(self, px: float, py: float) -> float:
        dx = max(self.x - px, 0.0, px - self.x1)
        dy = max(self.y - py, 0.0, py - self.y1)
        return math.hypot(dx, dy)

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px <= self.x1 and self.y <= py <= self.y1

    def raycast(self, ox: float, oy: float, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        """Per-beam distance to this rect; inf where a beam misses."""
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (self.x - ox) / dx
            t2 = (self.x1 - ox) / dx
            s1 = (self.y - oy) / dy
            s2 = (self.y1 - oy) / dy
        # beams parallel to an axis: inside the slab -> (-inf, inf), else miss
        para_x = dx == 0.0
        if np.any(para_x):
            inside = self.x <= ox <= self.x1
            t1 = np.where(para_x, -math.inf if inside else math.inf, t1)
            t2 = np.where(para_x, math.inf if inside else -math.inf, t2)
        para_y = dy == 0.0
        if np.any(para_y):
            inside = self.y <= oy <= self.y1
            s1 = np.where(para_y, -math.inf if inside else math.inf, s1)
            s2 = np.where(para_y, math.inf if inside else -math.inf, s2)
        tnear = np.maximum(np.minimum(t1, t2), np.minimum(s1, s2))
        tfar = np.minimum(np.maximum(t1, t2), np.maximum(s1, s2))
        hit = (tnear <= tfar) & (tfar >= 0.0)
        t = np.where(tnear >= 0.0, tnear, 0.0)
        return np.where(hit, t, math.inf)


@dataclass(frozen=True)
class Circle:
    x: float
    y: float
    radius: float

    def distance(self, px: float, py: float) -> float:
        return max(math.hypot(px - self.x, py - self.y) - self.radius, 0.0)

    def contains(self, px: float, py: float) -> bool:
        return math.hypot(px - self.x, py - self.y) <= self.radius

    def raycast(self, ox: float, oy: float, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
        fx, fy = ox - self.x, oy - self.y
        b = fx * dx + fy * dy
        c = fx * fx + fy * fy - self.radius * self.radius
        disc = b * b - c
        root = np.sqrt(np.maximum(disc, 0.0))
        t_in = -b - root
        t_out = -b + root
        t = np.where(t_in >= 0.0, t_in, np.where(t_out >= 0.0, 0.0, math.inf))
        return np.where(disc >= 0.0, t, math.inf)


Obstacle = Rect | Circle


@dataclass(frozen=True)
class PersonBeacon:
    id: str
    pose: Pose2D  # theta = facing direction


@dataclass
class World:
    bounds: Rect
    obstacles: list
    persons: list = field(default_factory=list)

    def min_obstacle_distance(self, x: float, y: float) -> float:
        if not self.obstacles:
            return math.inf
        return min(ob.distance(x, y) for ob in self.obstacles)

    def collides(self, x: float, y: float, radius: float) -> bool:
        if not (
            self.bounds.x + radius <= x <= self.bounds.x1 - radius
            and self.bounds.y + radius <= y <= self.bounds.y1 - radius
        ):
            return True
        return self.min_obstacle_distance(x, y) < radius

    def raycast(self, ox: float, oy: float, angles: np.ndarray) -> np.ndarray:
        """Distance to the first obstacle along each angle; inf on a miss."""
        dx = np.cos(angles)
        dy = np.sin(angles)
        dist = np.full(angles.shape, math.inf)
        for ob in self.obstacles:
            dist = np.minimum(dist, ob.raycast(ox, oy, dx, dy))
        return dist


# -- scan emulation ----------------------------------------------------------


@dataclass(frozen=True)
class ScanConfig:
    """Planar scan stand-in for the depth camera (Kinect-v1-like defaults)."""

    fov: float = math.radians(57.0)
    beams: int = 640
    range_min: float = 0.45
    range_max: float = 4.0
    rate: float = 10.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.fov <= 0:
            raise ScenarioError("scan fov must be > 0")
        if self.range_min >= self.range_max:
            raise ScenarioError("range_min must be < range_max")
        if self.beams < 2:
            raise ScenarioError("need at least 2 beams")


def raycast_scan(
    world: World,
    sensor_pose: Pose2D,
    cfg: ScanConfig,
    stamp: float = 0.0,
    rng: np.random.Generator | None = None,
) -> LaserScan:
    """Cast one scan. Beam angles are relative to the sensor heading."""
    angle_min = -cfg.fov / 2.0
    increment = cfg.fov / (cfg.beams - 1)
    rel = angle_min + increment * np.arange(cfg.beams)
    dist = world.raycast(sensor_pose.x, sensor_pose.y, sensor_pose.theta + rel)
    ranges = np.where(dist > cfg.range_max, math.inf, np.maximum(dist, cfg.range_min))
    if cfg.noise_sigma > 0.0 and rng is not None:
        finite = np.isfinite(ranges)
        noise = rng.normal(0.0, cfg.noise_sigma, size=int(finite.sum()))
        noisy = ranges[finite] + noise
        ranges[finite] = np.clip(noisy, cfg.range_min, cfg.range_max)
    return LaserScan(
        angle_min=angle_min,
        angle_max=cfg.fov / 2.0,
        angle_increment=increment,
        range_min=cfg.range_min,
        range_max=cfg.range_max,
        ranges=ranges,
        stamp=stamp,
    )


# -- face-detection proxy ----------------------------------------------------


@dataclass(frozen=True)
class Detection:
    person_id: str
    x: float        # camera frame, forward
    y: float        # camera frame, left
    range: float
    bearing: float


def detect_faces(
    world: World,
    camera_pose: Pose2D,
    max_range: float = 3.0,
    half_angle: float = math.radians(57.0) / 2.0,
    frontal_half_angle: float = math.radians(30.0),
) -> list[Detection]:
    """Geometric stand-in for a frontal face detector.

    A person is detected iff they are within max_range, inside the camera's
    horizontal field of view, facing the camera (the camera lies inside the
    person's frontal cone), and the line of sight is clear of obstacles.
    """
    out = []
    for person in world.persons:
        vx = person.pose.x - camera_pose.x
        vy = person.pose.y - camera_pose.y
        rng_ = math.hypot(vx, vy)
        if rng_ > max_range or rng_ == 0.0:
            continue
        bearing = wrap_angle(math.atan2(vy, vx) - camera_pose.theta)
        if abs(bearing) > half_angle:
            continue
        # frontal check: bearing from the person's facing direction back to the camera
        back = wrap_angle(math.atan2(-vy, -vx) - person.pose.theta)
        if abs(back) > frontal_half_angle:
            continue
        hit = world.raycast(camera_pose.x, camera_pose.y, np.array([math.atan2(vy, vx)]))[0]
        if hit < rng_ - 1e-9:
            continue
        out.append(
            Detection(
                person_id=person.id,
                x=rng_ * math.cos(bearing),
                y=rng_ * math.sin(bearing),
                range=rng_,
                bearing=bearing,
            )
        )
    return out


# -- robot + stepping ---------------------------------------------------------


@dataclass
class StepResult:
    events: list          # EncoderEvents in stamp order
    scan: LaserScan | None
    collision: bool


class Simulator:
    """Owns all world state; stepped by exactly one driver loop."""

    def __init__(
        self,
        world: World,
        start: Pose2D,
        wheel_radius: float = 0.0762,
        track_width: float = 0.39,
        ticks_per_rev: int = 36,
        scan_cfg: ScanConfig = ScanConfig(),
        robot_radius: float = math.hypot(0.1, 0.1),
        seed: int = 0,
        false_positive_rate: float = 0.0,
    ):
        if world.collides(start.x, start.y, robot_radius):
            raise ScenarioError("robot start pose collides with the world")
        self.world = world
        self.pose = start
        self.wheel_radius = wheel_radius
        self.track_width = track_width
        self.ticks_per_rev = ticks_per_rev
        self.scan_cfg = scan_cfg
        self.robot_radius = robot_radius
        self.time = 0.0
        self.collided = False
        self._v = {Wheel.LEFT: 0.0, Wheel.RIGHT: 0.0}
        self._tick_quantum = 2.0 * math.pi / ticks_per_rev  # wheel angle per tick
        self._wheel_angle = {Wheel.LEFT: 0.0, Wheel.RIGHT: 0.0}
        self._last_tick_time = {Wheel.LEFT: 0.0, Wheel.RIGHT: 0.0}
        self._next_scan = 0.0
        self._rng = np.random.default_rng(seed)
        self.false_positive_rate = false_positive_rate

    # -- commands -----------------------------------------------------------

    def set_wheel_speeds(self, v_left: float, v_right: float) -> None:
        self._v[Wheel.LEFT] = v_left
        self._v[Wheel.RIGHT] = v_right

    def set_twist(self, cmd: Twist) -> None:
        half = 0.5 * cmd.angular * self.track_width
        self.set_wheel_speeds(cmd.linear - half, cmd.linear + half)

    # -- stepping -----------------------------------------------------------

    def _pose_at(self, tau: float) -> Pose2D:
        omega, _ = icc(self._v[Wheel.LEFT], self._v[Wheel.RIGHT], self.track_width)
        v_s = center_velocity(self._v[Wheel.LEFT], self._v[Wheel.RIGHT])
        return arc_step(self.pose, v_s, omega, tau) if tau > 0 else self.pose

    def _free(self, pose: Pose2D) -> bool:
        return not self.world.collides(pose.x, pose.y, self.robot_radius)

    def step(self, dt: float) -> StepResult:
        """Advance ground truth by dt; motion stops at first contact.

        Per-step travel must stay below the thinnest obstacle (commands at
        navigation speeds and dt <= 1/15 s satisfy this by a wide margin),
        so an end-pose collision check cannot tunnel through geometry.
        """
        if dt <= 0:
            raise ScenarioError("dt must be > 0")
        t0 = self.time
        tau = dt
        collision = False
        if not self._free(self._pose_at(dt)):
            collision = True
            lo, hi = 0.0, dt
            for _ in range(48):
                mid = 0.5 * (lo + hi)
                if self._free(self._pose_at(mid)):
                    lo = mid
                else:
                    hi = mid
            tau = lo
        events = []
        for wheel in (Wheel.LEFT, Wheel.RIGHT):
            events.extend(self._advance_wheel(wheel, t0, tau))
        events.sort(key=lambda e: (e.stamp, e.wheel.value))
        self.pose = self._pose_at(tau)
        self.time = t0 + dt
        self.collided = self.collided or collision
        scan = None
        if self.time >= self._next_scan - 1e-12:
            scan = self.scan()
            period = 1.0 / self.scan_cfg.rate
            while self._next_scan <= self.time + 1e-12:
                self._next_scan += period
        return StepResult(events=events, scan=scan, collision=collision)

    def _advance_wheel(self, wheel: Wheel, t0: float, tau: float) -> list:
        """Emit one event per 1/36-rev boundary crossed during [t0, t0+tau]."""
        v = self._v[wheel]
        if tau <= 0 or v == 0.0:
            return []
        w = v / self.wheel_radius
        q = self._tick_quantum
        a0 = self._wheel_angle[wheel]
        a1 = a0 + w * tau
        n0 = math.floor(a0 / q)
        n1 = math.floor(a1 / q)
        events = []
        if n1 > n0:
            crossings = [(k, (k * q - a0) / w) for k in range(n0 + 1, n1 + 1)]
            sign = 1
        elif n1 < n0:
            crossings = [(k, (k * q - a0) / w) for k in range(n0, n1, -1)]
            sign = -1
        else:
            crossings = []
            sign = 0
        for _, t_rel in crossings:
            stamp = t0 + t_rel
            pw = stamp - self._last_tick_time[wheel]
            if pw <= 0.0:
                pw = 1e-9
            events.append(EncoderEvent(wheel=wheel, ticks=sign, pulse_width=pw, stamp=stamp))
            self._last_tick_time[wheel] = stamp
        self._wheel_angle[wheel] = a1
        return events

    # -- sensors ------------------------------------------------------------

    def scan(self) -> LaserScan:
        return raycast_scan(self.world, self.pose, self.scan_cfg, stamp=self.time, rng=self._rng)

    def detect(
        self,
        max_range: float = 3.0,
        half_angle: float = math.radians(57.0) / 2.0,
        frontal_half_angle: float = math.radians(30.0),
    ) -> list[Detection]:
        dets = detect_faces(self.world, self.pose, max_range, half_angle, frontal_half_angle)
        if self.false_positive_rate > 0.0 and self._rng.random() < self.false_positive_rate:
            rng_ = float(self._rng.uniform(0.5, max_range))
            bearing = float(self._rng.uniform(-half_angle, half_angle))
            dets.append(
                Detection(
                    person_id="<false-positive>",
                    x=rng_ * math.cos(bearing),
                    y=rng_ * math.sin(bearing),
                    range=rng_,
                    bearing=bearing,
                )
            )
        return dets


# -- scenario files -----------------------------------------------------------


def _parse_obstacle(spec: dict, locus: str):
    kind = spec.get("type")
    if kind == "rect":
        return Rect(float(spec["x"]), float(spec["y"]), float(spec["width"]), float(spec["height"]))
    if kind == "circle":
        return Circle(float(spec["x"]), float(spec["y"]), float(spec["radius"]))
    raise ScenarioError(f"{locus}: unknown obstacle type {kind!r}")


def world_from_dict(data: dict) -> tuple[World, Pose2D]:
    try:
        bx = [float(v) for v in data["bounds"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bounds: expected [xmin, ymin, xmax, ymax] ({exc})") from exc
    if len(bx) != 4 or bx[2] <= bx[0] or bx[3] <= bx[1]:
        raise ScenarioError("bounds: expected [xmin, ymin, xmax, ymax] with positive extent")
    bounds = Rect(bx[0], bx[1], bx[2] - bx[0], bx[3] - bx[1])

    obstacles = []
    for i, spec in enumerate(data.get("obstacles", [])):
        locus = f"obstacles[{i}]"
        try:
            ob = _parse_obstacle(spec, locus)
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"{locus}: {exc}") from exc
        if isinstance(ob, Rect):
            inside = bounds.contains(ob.x, ob.y) and bounds.contains(ob.x1, ob.y1)
        else:
            inside = (
                bounds.x <= ob.x - ob.radius
                and ob.x + ob.radius <= bounds.x1
                and bounds.y <= ob.y - ob.radius
                and ob.y + ob.radius <= bounds.y1
            )
        if not inside:
            raise ScenarioError(f"{locus}: obstacle extends outside bounds")
        obstacles.append(ob)

    persons = []
    for i, spec in enumerate(data.get("persons", [])):
        locus = f"persons[{i}]"
        try:
            person = PersonBeacon(
                id=str(spec["id"]),
                pose=Pose2D(float(spec["x"]), float(spec["y"]), wrap_angle(float(spec["theta"]))),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"{locus}: {exc}") from exc
        if not bounds.contains(person.pose.x, person.pose.y):
            raise ScenarioError(f"{locus}: person outside bounds")
        for j, ob in enumerate(obstacles):
            if ob.contains(person.pose.x, person.pose.y):
                raise ScenarioError(f"{locus}: person inside obstacles[{j}]")
        persons.append(person)

    try:
        rs = data["robot_start"]
        start = Pose2D(float(rs["x"]), float(rs["y"]), wrap_angle(float(rs["theta"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"robot_start: {exc}") from exc

    return World(bounds=bounds, obstacles=obstacles, persons=persons), start


def load_scenario(path: str | Path) -> tuple[World, Pose2D]:
    """Load a scenario JSON file; returns (world, robot start pose)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    try:
        return world_from_dict(data)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def scenario_path(name: str) -> Path:
    """Path of one of the bundled scenario files (empty_room, boxes, person_room)."""
    p = Path(__file__).parent / "scenarios" / f"{name}.json"
    if not p.exists():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return p


# -- ground-truth rasterization (used by tests and map views) -----------------


def rasterize_world(
    world: World, resolution: float, origin: Pose2D, width: int, height: int
) -> np.ndarray:
    """Boolean occupancy of cell centers against the true world geometry."""
    xs = origin.x + (np.arange(width) + 0.5) * resolution
    ys = origin.y + (np.arange(height) + 0.5) * resolution
    gx, gy = np.meshgrid(xs, ys)
    occ = np.zeros((height, width), dtype=bool)
    for ob in world.obstacles:
        if isinstance(ob, Rect):
            occ |= (gx >= ob.x) & (gx <= ob.x1) & (gy >= ob.y) & (gy <= ob.y1)
        else:
            occ |= (gx - ob.x) ** 2 + (gy - ob.y) ** 2 <= ob.radius**2
    return occ
