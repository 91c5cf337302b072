import math

import numpy as np
import pytest

from navsim.costmap import INSCRIBED, LETHAL, Costmap
from navsim.local_planner import NavGoal
from navsim.navigator import Navigator, NavState
from navsim.odometry import arc_step
from navsim.params import ParamSet
from navsim.types import Pose2D, Twist

P = ParamSet()
DT = 1.0 / P.controller_frequency


def free_costmap(n=240, res=0.05, origin=(-3.0, -3.0)):
    return Costmap(
        resolution=res,
        width=n,
        height=n,
        origin=Pose2D(*origin, 0.0),
        costs=np.zeros((n, n), dtype=np.uint8),
    )


class Harness:
    """Perfect-execution loop: the pose follows each command exactly."""

    def __init__(self, start=Pose2D(0, 0, 0), global_cm=None, local_cm=None):
        self.pose = start
        self.nav = Navigator(P)
        self.global_cm = global_cm if global_cm is not None else free_costmap()
        self.local_cm = local_cm if local_cm is not None else self.global_cm
        self.now = 0.0
        self.cmds = []
        self.states = []

    def run(self, goal, budget=90.0):
        self.nav.set_goal(goal, self.now)
        for _ in range(int(budget / DT)):
            cmd = self.nav.step(self.now, self.pose, self.global_cm, self.local_cm)
            self.cmds.append(cmd)
            self.states.append(self.nav.state)
            self.pose = arc_step(self.pose, cmd.linear, cmd.angular, DT)
            self.now += DT
            if self.nav.state.terminal and cmd == Twist(0.0, 0.0):
                break
        return self.nav.state


def test_reaches_goal_in_open_space():
    h = Harness()
    goal = NavGoal(Pose2D(2.0, 0.5, 0.0))
    assert h.run(goal) == NavState.SUCCEEDED
    assert h.pose.distance_to(goal.target) <= goal.xy_tolerance
    assert abs(h.pose.heading_error_to(goal.target.theta)) <= goal.yaw_tolerance
    assert h.cmds[-1] == Twist(0.0, 0.0)


def test_velocity_envelope_holds_throughout():
    h = Harness()
    h.run(NavGoal(Pose2D(1.5, -1.0, 2.0)))
    prev = Twist(0.0, 0.0)
    for cmd in h.cmds:
        assert abs(cmd.linear - prev.linear) <= P.acc_lim_x * DT + 1e-12
        assert abs(cmd.angular - prev.angular) <= P.acc_lim_theta * DT + 1e-12
        assert P.escape_vel - 1e-12 <= cmd.linear <= P.max_vel_x + 1e-12
        assert abs(cmd.angular) <= 1.0 + 1e-12
        prev = cmd


def test_status_progression():
    h = Harness()
    h.run(NavGoal(Pose2D(1.0, 0.0, 0.0)))
    seen = []
    for s in h.states:
        if not seen or seen[-1] != s:
            seen.append(s)
    assert seen[-1] == NavState.SUCCEEDED
    assert NavState.MOVING in seen


def test_goal_in_collision_aborts():
    cm = free_costmap()
    ix, iy = cm.world_to_cell(2.0, 2.0)
    cm.costs[iy - 4 : iy + 5, ix - 4 : ix + 5] = LETHAL
    h = Harness(global_cm=cm)
    state = h.run(NavGoal(Pose2D(2.0, 2.0, 0.0)), budget=5.0)
    assert state == NavState.ABORTED
    assert h.nav.reason == "goal in collision"


def test_unreachable_goal_aborts():
    cm = free_costmap()
    ix, _ = cm.world_to_cell(1.0, 0.0)
    cm.costs[:, ix] = LETHAL  # full wall across the map
    h = Harness(global_cm=cm)
    state = h.run(NavGoal(Pose2D(2.5, 0.0, 0.0)), budget=5.0)
    assert state == NavState.ABORTED
    assert h.nav.reason == "unreachable"


def test_preemption_reports_old_goal_aborted():
    h = Harness()
    h.nav.set_goal(NavGoal(Pose2D(2.0, 0.0, 0.0)), 0.0)
    for _ in range(20):
        cmd = h.nav.step(h.now, h.pose, h.global_cm, h.local_cm)
        h.pose = arc_step(h.pose, cmd.linear, cmd.angular, DT)
        h.now += DT
    first_id = h.nav.goal_id
    preempted = h.nav.set_goal(NavGoal(Pose2D(0.5, 1.0, 0.0)), h.now)
    assert preempted is not None
    assert preempted.goal_id == first_id
    assert preempted.state == NavState.ABORTED
    assert preempted.reason == "preempted"
    assert h.nav.goal_id == first_id + 1
    assert h.nav.state == NavState.PLANNING


def test_surprise_wall_triggers_escape_recovery():
    # global map is free (plan goes straight) but the local view has a wall
    local = free_costmap()
    ix, _ = local.world_to_cell(0.8, 0.0)
    local.costs[:, ix : ix + 3] = LETHAL
    h = Harness(local_cm=local)
    h.nav.set_goal(NavGoal(Pose2D(2.5, 0.0, 0.0)), 0.0)
    recovering_seen = False
    backward_cmd_seen = False
    for _ in range(int(30.0 / DT)):
        cmd = h.nav.step(h.now, h.pose, h.global_cm, h.local_cm)
        if h.nav.state == NavState.RECOVERING:
            recovering_seen = True
            if cmd.linear < 0:
                backward_cmd_seen = True
        h.pose = arc_step(h.pose, cmd.linear, cmd.angular, DT)
        h.now += DT
        if h.nav.state.terminal:
            break
    assert recovering_seen
    assert backward_cmd_seen
    # bounded recovery: the goal ends aborted rather than looping forever
    assert h.nav.state == NavState.ABORTED


def test_cancel_returns_to_idle():
    h = Harness()
    h.nav.set_goal(NavGoal(Pose2D(1.0, 0.0, 0.0)), 0.0)
    h.nav.step(0.0, h.pose, h.global_cm, h.local_cm)
    h.nav.cancel()
    assert h.nav.state == NavState.IDLE
    assert h.nav.goal is None
    assert h.nav.step(DT, h.pose, h.global_cm, h.local_cm) == Twist(0.0, 0.0)
