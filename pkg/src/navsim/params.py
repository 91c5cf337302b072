"""Parameter set and the flat ``key: value`` config file format.

Defaults are the tuned values that make the stack behave on the real
base (controller at 15 Hz, 0.175 m/s fixed cruise, 1.75 m inflation with
2.58 decay, 6x6 m rolling local window at 0.05 m), so an empty file is a
complete, working configuration. Robot geometry defaults (wheel_radius,
track_width) are plain config values, not tuned numbers; 36 ticks per
wheel revolution matches the two-channel wheel encoders.

File format: UTF-8 text, one ``key: value`` per line, ``#`` starts a
comment, blank lines ignored. Values are JSON literals, e.g.::

    controller_frequency: 15.0
    rolling_window: true
    footprint: [[-0.1,-0.1],[-0.1,0.1],[0.1,0.1],[0.1,-0.1]]
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path


class ParamError(ValueError):
    pass


def _default_footprint() -> list[list[float]]:
    return [[-0.1, -0.1], [-0.1, 0.1], [0.1, 0.1], [0.1, -0.1]]


@dataclass
class ParamSet:
    # base local planner
    controller_frequency: float = 15.0
    holonomic_robot: bool = False
    yaw_goal_tolerance: float = 0.2
    xy_goal_tolerance: float = 0.3
    sim_time: float = 4.0
    vtheta_samples: int = 40
    vx_samples: int = 3
    # costmap common
    footprint: list = field(default_factory=_default_footprint)
    transform_tolerance: float = 0.3
    publish_frequency: float = 10.0
    inflation_radius: float = 1.75
    cost_scaling_factor: float = 2.58
    # global costmap
    global_update_frequency: float = 10.0
    global_static_map: bool = True
    # local costmap
    local_update_frequency: float = 10.0
    local_publish_frequency: float = 10.0
    local_static_map: bool = False
    rolling_window: bool = True
    local_width: float = 6.0
    local_height: float = 6.0
    resolution: float = 0.05
    # travel speed and acceleration
    max_vel_x: float = 0.175
    min_vel_x: float = 0.175
    max_vel_theta: float = 1.0
    min_vel_theta: float = -1.0
    min_in_place_vel_theta: float = 1.0
    escape_vel: float = -0.175
    acc_lim_x: float = 0.05
    acc_lim_y: float = 0.05
    acc_lim_theta: float = 0.5
    # robot geometry (config-only defaults, not tuned values)
    wheel_radius: float = 0.0762
    track_width: float = 0.39
    ticks_per_rev: int = 36
    # trajectory scoring (weights are configuration, not tuned values)
    pdist_scale: float = 0.6
    gdist_scale: float = 0.8
    occdist_scale: float = 0.01
    sim_granularity: float = 0.1
    escape_duration: float = 1.0
    # depth-camera scan emulation (Kinect-v1-like defaults)
    scan_fov: float = math.radians(57.0)
    scan_beams: int = 640
    scan_range_min: float = 0.45
    scan_range_max: float = 4.0
    scan_rate: float = 10.0
    scan_noise_sigma: float = 0.0
    # mapping
    mapping_rate: float = 5.0
    l_hit: float = 0.85
    l_miss: float = -0.4
    l_min: float = -10.0
    l_max: float = 10.0
    occupied_threshold: float = 0.65
    free_threshold: float = 0.25
    # exploration
    min_frontier_size: int = 8
    # detection proxy and photo behavior
    detect_max_range: float = 3.0
    detect_half_angle: float = math.radians(57.0) / 2.0
    frontal_half_angle: float = math.radians(30.0)
    false_positive_rate: float = 0.0
    photo_standoff: float = 1.0
    photo_cooldown: float = 300.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for key in (
            "controller_frequency",
            "publish_frequency",
            "global_update_frequency",
            "local_update_frequency",
            "local_publish_frequency",
            "scan_rate",
            "mapping_rate",
        ):
            if getattr(self, key) <= 0:
                raise ParamError(f"{key} must be > 0, got {getattr(self, key)}")
        if self.min_vel_x > self.max_vel_x:
            raise ParamError("min_vel_x must be <= max_vel_x")
        if self.min_vel_theta > self.max_vel_theta:
            raise ParamError("min_vel_theta must be <= max_vel_theta")
        if self.resolution <= 0:
            raise ParamError("resolution must be > 0")
        if self.sim_time <= 0:
            raise ParamError("sim_time must be > 0")
        if self.vtheta_samples < 1:
            raise ParamError("vtheta_samples must be >= 1")
        if self.vx_samples < 1:
            raise ParamError("vx_samples must be >= 1")
        if self.xy_goal_tolerance <= 0 or self.yaw_goal_tolerance <= 0:
            raise ParamError("goal tolerances must be > 0")
        if self.wheel_radius <= 0:
            raise ParamError("wheel_radius must be > 0")
        if self.track_width <= 0:
            raise ParamError("track_width must be > 0")
        if self.ticks_per_rev <= 0:
            raise ParamError("ticks_per_rev must be > 0")
        if not (self.l_miss < 0 < self.l_hit):
            raise ParamError("log-odds increments need l_miss < 0 < l_hit")
        if not (self.free_threshold < self.occupied_threshold):
            raise ParamError("free_threshold must be < occupied_threshold")
        if self.scan_range_min >= self.scan_range_max:
            raise ParamError("scan_range_min must be < scan_range_max")
        if self.scan_fov <= 0:
            raise ParamError("scan_fov must be > 0")
        fp = [(float(x), float(y)) for x, y in self.footprint]
        if len(fp) < 3:
            raise ParamError("footprint needs at least 3 vertices")
        if self.inflation_radius < self.inscribed_radius():
            raise ParamError(
                "inflation_radius must be >= the footprint inscribed radius"
            )

    def inscribed_radius(self) -> float:
        """Distance from the origin to the nearest footprint edge."""
        pts = [(float(x), float(y)) for x, y in self.footprint]
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
        """Distance from the origin to the farthest footprint vertex."""
        return max(math.hypot(float(x), float(y)) for x, y in self.footprint)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ParamSet)}


def _coerce(key: str, value, line_no: int):
    want = _FIELD_TYPES[key]
    if want == "bool":
        if not isinstance(value, bool):
            raise ParamError(f"line {line_no}: {key} expects true/false")
        return value
    if want == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParamError(f"line {line_no}: {key} expects an integer")
        if isinstance(value, float) and not value.is_integer():
            raise ParamError(f"line {line_no}: {key} expects an integer")
        return int(value)
    if want == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParamError(f"line {line_no}: {key} expects a number")
        return float(value)
    if want == "list":
        if not isinstance(value, list):
            raise ParamError(f"line {line_no}: {key} expects a list")
        return value
    return value


def load_params(path: str | Path) -> ParamSet:
    """Parse a config file; absent keys take their defaults."""
    path = Path(path)
    overrides: dict = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParamError(f"{path}:{line_no}: expected 'key: value', got {raw!r}")
        key, _, value_text = line.partition(":")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ParamError(f"{path}:{line_no}: unknown key {key!r}")
        try:
            value = json.loads(value_text.strip())
        except json.JSONDecodeError as exc:
            raise ParamError(f"{path}:{line_no}: bad value for {key!r}: {exc.msg}") from exc
        overrides[key] = _coerce(key, value, line_no)
    try:
        return ParamSet(**overrides)
    except ParamError:
        raise
    except TypeError as exc:
        raise ParamError(str(exc)) from exc


def save_params(params: ParamSet, path: str | Path) -> None:
    """Write every key so that load(save(p)) == p."""
    lines = []
    for f in dataclasses.fields(ParamSet):
        lines.append(f"{f.name}: {json.dumps(getattr(params, f.name))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
