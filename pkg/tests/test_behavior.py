import itertools
import json
import math

import numpy as np
import pytest

from navsim.behavior import (
    ApproachPerson,
    BehaviorInputs,
    BehaviorState,
    Mode,
    NavSignal,
    RequestExplorationGoal,
    StartRotation,
    TakePhoto,
    behavior_step,
    capture_photo,
    face_to_goal,
    keys_to_twist,
)
from navsim.params import ParamSet
from navsim.transforms import default_robot_tree
from navsim.types import FREE, Pose2D, TriStateMap, Twist
from navsim.world import Detection

P = ParamSet()


def det(person="p1", x=2.0, y=0.0):
    return Detection(person_id=person, x=x, y=y, range=math.hypot(x, y), bearing=math.atan2(y, x))


# -- teleop -----------------------------------------------------------------------


def test_key_map():
    assert keys_to_twist("w", P) == Twist(0.175, 0.0)
    assert keys_to_twist("x", P) == Twist(-0.175, 0.0)
    assert keys_to_twist("a", P) == Twist(0.0, 1.0)
    assert keys_to_twist("d", P) == Twist(0.0, -1.0)
    assert keys_to_twist("s", P) == Twist(0.0, 0.0)
    assert keys_to_twist("q", P) is None


# -- face_to_goal -------------------------------------------------------------------


def test_goal_one_meter_short_of_person():
    goal = face_to_goal(det(x=2.0, y=0.0), Pose2D(0, 0, 0), standoff=1.0)
    assert (goal.target.x, goal.target.y) == pytest.approx((1.0, 0.0))
    assert goal.target.theta == pytest.approx(0.0)
    goal = face_to_goal(det(x=3.0, y=0.0), Pose2D(0, 0, 0), standoff=1.0)
    assert (goal.target.x, goal.target.y) == pytest.approx((2.0, 0.0))


def test_close_detection_reorients_only():
    goal = face_to_goal(det(x=0.5, y=0.0), Pose2D(0, 0, 0), standoff=1.0)
    assert (goal.target.x, goal.target.y) == (0.0, 0.0)
    assert goal.target.theta == pytest.approx(0.0)


def test_goal_respects_robot_heading_and_offset():
    # robot facing +y: a detection dead ahead lies along +y in the world
    goal = face_to_goal(det(x=2.0, y=0.0), Pose2D(1.0, 1.0, math.pi / 2), standoff=1.0)
    assert (goal.target.x, goal.target.y) == pytest.approx((1.0, 2.0))
    assert goal.target.theta == pytest.approx(math.pi / 2)


def test_goal_via_transform_tree():
    tree = default_robot_tree()
    goal = face_to_goal(det(x=2.0, y=0.0), Pose2D(0, 0, 0), standoff=1.0, transforms=tree)
    assert (goal.target.x, goal.target.y) == pytest.approx((1.0, 0.0))


# -- capture_photo -------------------------------------------------------------------


def small_map():
    cells = np.full((40, 40), FREE, dtype=np.uint8)
    return TriStateMap(resolution=0.05, width=40, height=40, origin=Pose2D(0, 0, 0), cells=cells)


def test_capture_writes_record_and_snapshot(tmp_path):
    record = capture_photo(small_map(), "p1", Pose2D(1.0, 1.0, 0.2), det(), 12.5, tmp_path, index=0)
    assert record.snapshot == "photo_000_p1.pgm"
    data = json.loads((tmp_path / "photo_000_p1.json").read_text())
    assert data["person_id"] == "p1"
    assert data["pose"]["x"] == 1.0
    assert (tmp_path / "photo_000_p1.pgm").exists()


def test_capture_storage_failure_is_survivable(tmp_path):
    blocked = tmp_path / "not_a_dir"
    blocked.write_text("file in the way")
    record = capture_photo(small_map(), "p1", Pose2D(0, 0, 0), det(), 0.0, blocked / "x")
    assert record.snapshot is None
    assert record.person_id == "p1"


def test_capture_without_dir_returns_record_only():
    record = capture_photo(None, "p1", Pose2D(0, 0, 0), det(), 3.0, None)
    assert record.snapshot is None
    assert record.stamp == 3.0


# -- behavior state machine ------------------------------------------------------------


def all_inputs(now=0.0):
    """The finite input alphabet the machine is enumerated over."""
    detection_options = ((), (det("p1"),), (det("seen"),))
    for dets, nav, frontiers, rotation in itertools.product(
        detection_options,
        list(NavSignal),
        (False, True),
        (False, True),
    ):
        yield BehaviorInputs(
            detections=dets,
            nav=nav,
            frontiers_available=frontiers,
            rotation_complete=rotation,
            now=now,
        )


def state_in(mode, **kw):
    defaults = dict(
        mode=mode,
        target_person="p1" if mode in (Mode.APPROACHING, Mode.CAPTURING) else None,
        last_attempt=(("seen", -10.0),),
        cooldown=300.0,
    )
    defaults.update(kw)
    return BehaviorState(**defaults)


def expected_transition(state, inputs):
    """Oracle: the declared transition table, written out independently."""
    fresh = [d for d in inputs.detections if not state.attempted_recently(d.person_id, inputs.now)]
    if state.mode is Mode.IDLE:
        return Mode.IDLE, []
    if state.mode is Mode.EXPLORING:
        if fresh:
            return Mode.APPROACHING, [ApproachPerson]
        if inputs.frontiers_available:
            if inputs.nav is NavSignal.ACTIVE:
                return Mode.EXPLORING, []
            return Mode.EXPLORING, [RequestExplorationGoal]
        if inputs.nav is NavSignal.ACTIVE:
            return Mode.EXPLORING, []
        return Mode.IDLE, []
    if state.mode is Mode.APPROACHING:
        if inputs.nav is NavSignal.SUCCEEDED:
            return Mode.CAPTURING, [TakePhoto]
        if inputs.nav in (NavSignal.ABORTED, NavSignal.NONE):
            return Mode.EXPLORING, []
        return Mode.APPROACHING, []
    if state.mode is Mode.CAPTURING:
        return Mode.RESUMING, [StartRotation]
    if state.mode is Mode.RESUMING:
        if inputs.rotation_complete:
            return Mode.EXPLORING, []
        return Mode.RESUMING, []
    raise AssertionError("unreachable")


def test_exhaustive_transition_enumeration():
    now = 0.0
    seen = 0
    for mode in Mode:
        state = state_in(mode)
        for inputs in all_inputs(now):
            nxt, actions = behavior_step(state, inputs)
            want_mode, want_actions = expected_transition(state, inputs)
            assert nxt.mode is want_mode, (mode, inputs)
            assert [type(a) for a in actions] == want_actions, (mode, inputs)
            # exactly one successor, no duplicated actions
            assert len(actions) == len(set(map(type, actions)))
            again, again_actions = behavior_step(state, inputs)
            assert again == nxt and [type(a) for a in again_actions] == [
                type(a) for a in actions
            ]
            seen += 1
    assert seen == len(Mode) * 3 * len(NavSignal) * 2 * 2


def test_cooldown_blocks_repeat_approach():
    state = BehaviorState(cooldown=300.0)
    nxt, actions = behavior_step(state, BehaviorInputs(detections=(det("p1"),), now=10.0))
    assert nxt.mode is Mode.APPROACHING
    # the attempt is stamped immediately: same person again within cooldown
    back = BehaviorState(mode=Mode.EXPLORING, last_attempt=nxt.last_attempt, cooldown=300.0)
    nxt2, actions2 = behavior_step(back, BehaviorInputs(detections=(det("p1"),), now=200.0))
    assert nxt2.mode is not Mode.APPROACHING
    # after the cooldown expires the person is fair game again
    nxt3, _ = behavior_step(back, BehaviorInputs(detections=(det("p1"),), now=400.0))
    assert nxt3.mode is Mode.APPROACHING


def test_nearest_unvisited_detection_wins():
    state = BehaviorState()
    inputs = BehaviorInputs(detections=(det("far", x=2.5), det("near", x=1.5)), now=0.0)
    nxt, actions = behavior_step(state, inputs)
    assert nxt.target_person == "near"
    assert actions[0].person_id == "near"


def test_full_cycle_explore_approach_capture_resume():
    state = BehaviorState()
    state, actions = behavior_step(state, BehaviorInputs(detections=(det("p1"),), now=1.0))
    assert state.mode is Mode.APPROACHING and isinstance(actions[0], ApproachPerson)
    state, actions = behavior_step(state, BehaviorInputs(nav=NavSignal.ACTIVE, now=2.0))
    assert state.mode is Mode.APPROACHING and actions == []
    state, actions = behavior_step(state, BehaviorInputs(nav=NavSignal.SUCCEEDED, now=3.0))
    assert state.mode is Mode.CAPTURING and isinstance(actions[0], TakePhoto)
    assert state.photo_count == 1
    state, actions = behavior_step(state, BehaviorInputs(now=3.1))
    assert state.mode is Mode.RESUMING and isinstance(actions[0], StartRotation)
    state, actions = behavior_step(state, BehaviorInputs(rotation_complete=False, now=3.2))
    assert state.mode is Mode.RESUMING and actions == []
    state, actions = behavior_step(
        state, BehaviorInputs(rotation_complete=True, frontiers_available=True, now=9.0)
    )
    assert state.mode is Mode.EXPLORING
    state, actions = behavior_step(
        state, BehaviorInputs(frontiers_available=True, now=9.1)
    )
    assert isinstance(actions[0], RequestExplorationGoal)
    # the photographed person is blocked by the cooldown now
    state, actions = behavior_step(
        state, BehaviorInputs(detections=(det("p1"),), frontiers_available=True, now=10.0)
    )
    assert state.mode is Mode.EXPLORING


def test_aborted_approach_returns_to_exploring_without_photo():
    state = BehaviorState()
    state, _ = behavior_step(state, BehaviorInputs(detections=(det("p1"),), now=0.0))
    state, actions = behavior_step(state, BehaviorInputs(nav=NavSignal.ABORTED, now=5.0))
    assert state.mode is Mode.EXPLORING
    assert state.photo_count == 0
    assert actions == []


def test_idle_when_nothing_left():
    state = BehaviorState()
    state, actions = behavior_step(
        state, BehaviorInputs(frontiers_available=False, nav=NavSignal.NONE, now=0.0)
    )
    assert state.mode is Mode.IDLE
    assert actions == []
    # terminal: stays idle on any further input
    for inputs in all_inputs(now=1.0):
        nxt, acts = behavior_step(state, inputs)
        assert nxt.mode is Mode.IDLE and acts == []
