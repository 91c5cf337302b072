"""Robot behaviors: keyboard teleop, and the photo-taking state machine.

The photo behavior: explore until a frontal face is detected, navigate to
a standoff point in front of the person, record a photo event, rotate one
full turn in place, then resume exploring. A person is approached at most
once per cooldown window, whether the approach succeeded or not.

behavior_step is a pure transition function over a small input alphabet
(detections, navigation outcome, frontier availability, rotation
progress) so the whole machine is enumerable; the runner interprets the
emitted actions.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .local_planner import NavGoal
from .mapping import save_map
from .params import ParamSet
from .transforms import TransformTree
from .types import Pose2D, TriStateMap, Twist, wrap_angle
from .world import Detection

log = logging.getLogger(__name__)


# -- teleoperation ------------------------------------------------------------

def keys_to_twist(key: str, params: ParamSet) -> Twist | None:
    """Map a key press to a velocity command; unmapped keys map to nothing."""
    table = {
        "w": Twist(params.max_vel_x, 0.0),
        "x": Twist(-params.max_vel_x, 0.0),
        "a": Twist(0.0, params.max_vel_theta),
        "d": Twist(0.0, -params.max_vel_theta),
        "s": Twist(0.0, 0.0),
    }
    return table.get(key)


# -- detection to goal ---------------------------------------------------------

def face_to_goal(
    detection: Detection,
    robot: Pose2D,
    standoff: float = 1.0,
    transforms: TransformTree | None = None,
    xy_tolerance: float = 0.3,
    yaw_tolerance: float = 0.2,
) -> NavGoal:
    """Goal `standoff` meters short of the person, facing them.

    A detection already closer than the standoff keeps the robot where it
    is and only turns it toward the person.
    """
    dx, dy = detection.x, detection.y
    if transforms is not None:
        cam = transforms.lookup("base_link", "camera_link")
        dx, dy = cam.apply(detection.x, detection.y)
    # camera/base frame -> world
    c, s = math.cos(robot.theta), math.sin(robot.theta)
    px = robot.x + c * dx - s * dy
    py = robot.y + s * dx + c * dy
    rng = math.hypot(px - robot.x, py - robot.y)
    theta = math.atan2(py - robot.y, px - robot.x)
    if rng <= standoff:
        return NavGoal(Pose2D(robot.x, robot.y, theta), xy_tolerance, yaw_tolerance)
    f = (rng - standoff) / rng
    return NavGoal(
        Pose2D(robot.x + f * (px - robot.x), robot.y + f * (py - robot.y), theta),
        xy_tolerance,
        yaw_tolerance,
    )


# -- photo records --------------------------------------------------------------

@dataclass(frozen=True)
class PhotoRecord:
    person_id: str
    pose: Pose2D              # robot pose at capture
    detection: tuple          # (x, y) in the camera frame at capture
    stamp: float
    snapshot: str | None      # map snapshot path, None if storage failed


def capture_photo(
    tri: TriStateMap | None,
    person_id: str,
    robot: Pose2D,
    detection: Detection,
    stamp: float,
    photo_dir: str | Path | None,
    index: int = 0,
) -> PhotoRecord:
    """Persist one capture: a JSON record plus a local map snapshot.

    Storage failures are logged and leave the behavior running; the
    returned record then has no snapshot reference.
    """
    snapshot_name = None
    if photo_dir is not None:
        try:
            photo_dir = Path(photo_dir)
            photo_dir.mkdir(parents=True, exist_ok=True)
            stem = f"photo_{index:03d}_{person_id}"
            if tri is not None:
                view = _local_view(tri, robot, half_extent=2.0)
                save_map(view, photo_dir / f"{stem}.pgm")
                snapshot_name = f"{stem}.pgm"
            record = {
                "person_id": person_id,
                "pose": {"x": robot.x, "y": robot.y, "theta": robot.theta},
                "detection": {"x": detection.x, "y": detection.y},
                "stamp": stamp,
                "snapshot": snapshot_name,
            }
            (photo_dir / f"{stem}.json").write_text(json.dumps(record, indent=2), encoding="utf-8")
        except OSError as exc:
            log.warning("photo capture storage failed: %s", exc)
            snapshot_name = None
    return PhotoRecord(
        person_id=person_id,
        pose=robot,
        detection=(detection.x, detection.y),
        stamp=stamp,
        snapshot=snapshot_name,
    )


def _local_view(tri: TriStateMap, center: Pose2D, half_extent: float) -> TriStateMap:
    cx, cy = tri.world_to_cell(center.x, center.y)
    half = int(round(half_extent / tri.resolution))
    x0, x1 = max(0, cx - half), min(tri.width, cx + half)
    y0, y1 = max(0, cy - half), min(tri.height, cy + half)
    return TriStateMap(
        resolution=tri.resolution,
        width=x1 - x0,
        height=y1 - y0,
        origin=Pose2D(tri.origin.x + x0 * tri.resolution, tri.origin.y + y0 * tri.resolution, 0.0),
        cells=tri.cells[y0:y1, x0:x1].copy(),
    )


# -- behavior state machine ------------------------------------------------------

class Mode(Enum):
    EXPLORING = "exploring"
    APPROACHING = "approaching"
    CAPTURING = "capturing"
    RESUMING = "resuming"
    IDLE = "idle"  # terminal: nothing left to explore, nobody to photograph


class NavSignal(Enum):
    NONE = "none"          # no goal active
    ACTIVE = "active"      # goal accepted, still running
    SUCCEEDED = "succeeded"
    ABORTED = "aborted"


@dataclass(frozen=True)
class BehaviorInputs:
    detections: tuple = ()
    nav: NavSignal = NavSignal.NONE
    frontiers_available: bool = False
    rotation_complete: bool = False
    now: float = 0.0


@dataclass(frozen=True)
class BehaviorState:
    mode: Mode = Mode.EXPLORING
    target_person: str | None = None
    last_attempt: tuple = ()   # ((person_id, stamp), ...) most recent attempt per person
    cooldown: float = 300.0
    photo_count: int = 0

    def attempted_recently(self, person_id: str, now: float) -> bool:
        for pid, stamp in self.last_attempt:
            if pid == person_id and now - stamp < self.cooldown:
                return True
        return False

    def _mark(self, person_id: str, now: float) -> tuple:
        kept = tuple((pid, st) for pid, st in self.last_attempt if pid != person_id)
        return kept + ((person_id, now),)


# actions emitted by behavior_step, interpreted by the runner
@dataclass(frozen=True)
class ApproachPerson:
    person_id: str
    detection: Detection


@dataclass(frozen=True)
class RequestExplorationGoal:
    pass


@dataclass(frozen=True)
class TakePhoto:
    person_id: str


@dataclass(frozen=True)
class StartRotation:
    pass


def behavior_step(state: BehaviorState, inputs: BehaviorInputs) -> tuple[BehaviorState, list]:
    """One transition; returns the successor state and its actions."""
    now = inputs.now

    if state.mode is Mode.IDLE:
        return state, []

    if state.mode is Mode.EXPLORING:
        fresh = [
            d for d in inputs.detections if not state.attempted_recently(d.person_id, now)
        ]
        if fresh:
            det = min(fresh, key=lambda d: d.range)
            nxt = replace(
                state,
                mode=Mode.APPROACHING,
                target_person=det.person_id,
                last_attempt=state._mark(det.person_id, now),
            )
            return nxt, [ApproachPerson(det.person_id, det)]
        if inputs.frontiers_available:
            if inputs.nav in (NavSignal.NONE, NavSignal.SUCCEEDED, NavSignal.ABORTED):
                return state, [RequestExplorationGoal()]
            return state, []
        if inputs.nav is NavSignal.ACTIVE:
            return state, []  # finish the leg; the map may still grow
        return replace(state, mode=Mode.IDLE, target_person=None), []

    if state.mode is Mode.APPROACHING:
        if inputs.nav is NavSignal.SUCCEEDED:
            nxt = replace(state, mode=Mode.CAPTURING, photo_count=state.photo_count + 1)
            return nxt, [TakePhoto(state.target_person)]
        if inputs.nav in (NavSignal.ABORTED, NavSignal.NONE):
            return replace(state, mode=Mode.EXPLORING, target_person=None), []
        return state, []

    if state.mode is Mode.CAPTURING:
        # the photo was taken on entry; hand over to the post-capture turn
        return replace(state, mode=Mode.RESUMING, target_person=None), [StartRotation()]

    # RESUMING
    if inputs.rotation_complete:
        return replace(state, mode=Mode.EXPLORING), []
    return state, []
