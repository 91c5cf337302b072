"""Goal execution: global plan + local control + escape recovery.

State machine: idle -> planning -> moving -> (recovering)* -> succeeded |
aborted. A new goal preempts the active one (surfaced as aborted with
reason "preempted"). Every command this module emits is rate-limited
against the previous one by the acceleration limits at the control
frequency, including the ramp down to the final zero command, so the
published stream never jumps.

Near the goal the sampler hands over to an approach controller that
brakes at acc_lim_x so the base comes to rest inside the xy tolerance
(with a fixed cruise floor the sampler alone cannot slow down), then the
base rotates in place onto the goal heading with the same braking logic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .costmap import INSCRIBED, Costmap
from .local_planner import (
    CommandLimiter,
    NavGoal,
    NoValidTrajectory,
    check_trajectory,
    clamp_to_accel,
    compute_velocity,
    recovery_escape,
)
from .params import ParamSet
from .planner import GoalInCollision, Plan, PlanningError, Unreachable, plan_global
from .types import Pose2D, Twist, wrap_angle


class NavState(Enum):
    IDLE = "idle"
    PLANNING = "planning"
    MOVING = "moving"
    RECOVERING = "recovering"
    SUCCEEDED = "succeeded"
    ABORTED = "aborted"

    @property
    def terminal(self) -> bool:
        return self in (NavState.SUCCEEDED, NavState.ABORTED)


@dataclass
class NavStatus:
    state: NavState
    goal: NavGoal | None = None
    goal_id: int = 0
    cmd: Twist = field(default_factory=Twist)
    reason: str | None = None


_MAX_RECOVERIES = 5
_REPLAN_PERIOD = 5.0
_BLOCK_LOOKAHEAD = 2.0  # meters of plan checked against the local costmap


class Navigator:
    """Drives one goal at a time; call step() once per control period."""

    def __init__(self, params: ParamSet, limiter: CommandLimiter | None = None):
        self.params = params
        self.limiter = limiter if limiter is not None else CommandLimiter(params)
        self.state = NavState.IDLE
        self.goal: NavGoal | None = None
        self.goal_id = 0
        self.plan: Plan | None = None
        self.reason: str | None = None
        self._latched = False
        self._recover_until = 0.0
        self._recoveries = 0
        self._last_plan_time = -math.inf

    @property
    def prev_cmd(self) -> Twist:
        return self.limiter.prev

    # -- goal management ----------------------------------------------------

    def set_goal(self, goal: NavGoal, now: float) -> NavStatus | None:
        """Accept a goal; returns the preemption status of the old goal, if any."""
        preempted = None
        if self.goal is not None and not self.state.terminal and self.state != NavState.IDLE:
            preempted = NavStatus(
                NavState.ABORTED, self.goal, self.goal_id, self.prev_cmd, "preempted"
            )
        self.goal = goal
        self.goal_id += 1
        self.state = NavState.PLANNING
        self.plan = None
        self.reason = None
        self._latched = False
        self._recoveries = 0
        self._last_plan_time = -math.inf
        self._status_dirty = True
        return preempted

    def cancel(self) -> None:
        """Drop the goal and fall back to idle."""
        self.state = NavState.IDLE
        self.goal = None
        self.plan = None
        self.reason = None
        self._latched = False

    def status(self) -> NavStatus:
        return NavStatus(self.state, self.goal, self.goal_id, self.prev_cmd, self.reason)

    def _abort(self, reason: str) -> None:
        self.state = NavState.ABORTED
        self.reason = reason

    # -- control ------------------------------------------------------------

    def _emit(self, target: Twist) -> Twist:
        return self.limiter.emit(target)

    def _braking_speed(self, distance: float) -> float:
        """Fastest speed from which acc_lim_x can stop within `distance`."""
        return math.sqrt(max(2.0 * self.params.acc_lim_x * distance, 0.0))

    def _braking_omega(self, err: float) -> float:
        w = math.sqrt(max(2.0 * self.params.acc_lim_theta * abs(err), 0.0))
        return math.copysign(min(w, self.params.max_vel_theta), err)

    def step(self, now: float, pose: Pose2D, global_costmap: Costmap, local_costmap: Costmap) -> Twist:
        """One control period; returns the command to publish."""
        p = self.params
        if self.state in (NavState.IDLE, NavState.SUCCEEDED, NavState.ABORTED):
            return self._emit(Twist(0.0, 0.0))

        if self.state == NavState.RECOVERING:
            if now >= self._recover_until:
                self.state = NavState.PLANNING
                return self._emit(Twist(0.0, 0.0))
            escape = recovery_escape(p)
            cmd = self._emit_checked(escape, pose, local_costmap, horizon=0.5)
            if cmd is None:
                self._abort("escape blocked")
                return self._emit(Twist(0.0, 0.0))
            return cmd

        if self.state == NavState.PLANNING:
            try:
                self.plan = plan_global(global_costmap, pose, self.goal.target)
            except GoalInCollision:
                self._abort("goal in collision")
                return self._emit(Twist(0.0, 0.0))
            except Unreachable:
                self._abort("unreachable")
                return self._emit(Twist(0.0, 0.0))
            except PlanningError as exc:
                self._abort(str(exc))
                return self._emit(Twist(0.0, 0.0))
            self._last_plan_time = now
            self.state = NavState.MOVING

        # MOVING
        goal = self.goal
        dist = pose.distance_to(goal.target)
        if dist <= goal.xy_tolerance:
            self._latched = True

        if self._latched:
            return self._rotate_to_goal(pose)

        if self._plan_blocked(local_costmap, pose) or now - self._last_plan_time >= _REPLAN_PERIOD:
            try:
                self.plan = plan_global(global_costmap, pose, goal.target)
                self._last_plan_time = now
            except GoalInCollision:
                self._abort("goal in collision")
                return self._emit(Twist(0.0, 0.0))
            except PlanningError:
                pass  # keep following the old plan until recovery decides

        stop_zone = self.prev_cmd.linear**2 / (2.0 * p.acc_lim_x) + 0.2
        if dist <= stop_zone:
            target = self._approach(pose, goal)
        else:
            try:
                target = compute_velocity(local_costmap, self.plan, pose, self.prev_cmd, p)
                cmd = self._emit(target)
                return cmd
            except NoValidTrajectory:
                return self._start_recovery(now, pose, local_costmap)

        cmd = self._emit_checked(target, pose, local_costmap, horizon=min(p.sim_time, 2.0))
        if cmd is None:
            return self._start_recovery(now, pose, local_costmap)
        return cmd

    # -- helpers ------------------------------------------------------------

    def _emit_checked(
        self, target: Twist, pose: Pose2D, local_costmap: Costmap, horizon: float
    ) -> Twist | None:
        cmd = clamp_to_accel(target, self.prev_cmd, self.params)
        if cmd.linear != 0.0 or cmd.angular != 0.0:
            worst = check_trajectory(
                local_costmap, pose, cmd, horizon, self.params.sim_granularity
            )
            if worst is None:
                return None
        return self._emit(target)

    def _approach(self, pose: Pose2D, goal: NavGoal) -> Twist:
        dist = pose.distance_to(goal.target)
        v = min(
            self.params.max_vel_x,
            self._braking_speed(max(dist - 0.5 * goal.xy_tolerance, 0.0)),
        )
        bearing = math.atan2(goal.target.y - pose.y, goal.target.x - pose.x)
        err = wrap_angle(bearing - pose.theta)
        w = min(max(1.5 * err, -self.params.max_vel_theta), self.params.max_vel_theta)
        return Twist(v, w)

    def _rotate_to_goal(self, pose: Pose2D) -> Twist:
        err = wrap_angle(self.goal.target.theta - pose.theta)
        if abs(err) <= self.goal.yaw_tolerance and self.limiter.stoppable():
            self.state = NavState.SUCCEEDED
            return self._emit(Twist(0.0, 0.0))
        return self._emit(Twist(0.0, self._braking_omega(err)))

    def _plan_blocked(self, local_costmap: Costmap, robot: Pose2D | None = None) -> bool:
        if self.plan is None:
            return True
        poses = self.plan.poses
        if not poses:
            return True
        start = 0
        if robot is not None:
            start = min(
                range(len(poses)), key=lambda i: (poses[i].x - robot.x) ** 2 + (poses[i].y - robot.y) ** 2
            )
        checked = 0.0
        prev = None
        for pose in poses[start:]:
            ix, iy = local_costmap.world_to_cell(pose.x, pose.y)
            if local_costmap.in_bounds(ix, iy) and local_costmap.costs[iy, ix] >= INSCRIBED:
                return True
            if prev is not None:
                checked += pose.distance_to(prev)
                if checked > _BLOCK_LOOKAHEAD:
                    break
            prev = pose
        return False

    def _start_recovery(self, now: float, pose: Pose2D, local_costmap: Costmap) -> Twist:
        self._recoveries += 1
        if self._recoveries > _MAX_RECOVERIES:
            self._abort("recovery limit reached")
            return self._emit(Twist(0.0, 0.0))
        self.state = NavState.RECOVERING
        self._recover_until = now + self.params.escape_duration
        cmd = self._emit_checked(recovery_escape(self.params), pose, local_costmap, horizon=0.5)
        if cmd is None:
            self._abort("escape blocked")
            return self._emit(Twist(0.0, 0.0))
        return cmd
