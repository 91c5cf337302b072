"""Short-horizon velocity selection by trajectory rollout.

Candidate (v, w) pairs are sampled inside the window reachable from the
previous command under the acceleration limits at the control rate, each
is forward-simulated for sim_time with the exact constant-velocity arc,
trajectories that touch the guaranteed-collision cost band are discarded,
and the survivors are scored by distance to the global plan, distance to
the local goal, and the worst cost traversed. In-place rotation
candidates at +-min_in_place_vel_theta join the pool whenever the heading
error exceeds the yaw goal tolerance.

The cruise speed window collapses to the single configured value when
min_vel_x == max_vel_x; reaching that floor from standstill (and leaving
it to stop) necessarily passes through lower speeds, rate-limited by
acc_lim_x per control period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .costmap import INSCRIBED, Costmap
from .odometry import OMEGA_EPS
from .params import ParamSet
from .planner import Plan
from .types import Pose2D, Twist, wrap_angle


class NoValidTrajectory(Exception):
    pass


@dataclass(frozen=True)
class NavGoal:
    target: Pose2D
    xy_tolerance: float = 0.3
    yaw_tolerance: float = 0.2

    def __post_init__(self):
        if self.xy_tolerance <= 0 or self.yaw_tolerance <= 0:
            raise ValueError("goal tolerances must be > 0")


def goal_reached(pose: Pose2D, goal: NavGoal) -> bool:
    if pose.distance_to(goal.target) > goal.xy_tolerance:
        return False
    return abs(wrap_angle(pose.theta - goal.target.theta)) <= goal.yaw_tolerance


def clamp_to_accel(target: Twist, prev: Twist, params: ParamSet) -> Twist:
    """Limit the change from prev to target to one control period's worth."""
    dt = 1.0 / params.controller_frequency
    dv = params.acc_lim_x * dt
    dw = params.acc_lim_theta * dt
    v = min(max(target.linear, prev.linear - dv), prev.linear + dv)
    w = min(max(target.angular, prev.angular - dw), prev.angular + dw)
    return Twist(v, w)


class CommandLimiter:
    """Single gate for the published command stream.

    Every producer (sampler, approach controller, rotation, teleop) emits
    through one shared limiter so consecutive commands always respect the
    acceleration limits at the control rate and the velocity caps.
    """

    def __init__(self, params: ParamSet):
        self.params = params
        self.prev = Twist(0.0, 0.0)

    def emit(self, target: Twist) -> Twist:
        cmd = clamp_to_accel(target, self.prev, self.params)
        cap_w = max(self.params.max_vel_theta, self.params.min_in_place_vel_theta)
        cmd = Twist(
            min(max(cmd.linear, min(self.params.escape_vel, 0.0)), self.params.max_vel_x),
            min(max(cmd.angular, -cap_w), cap_w),
        )
        self.prev = cmd
        return cmd

    def stoppable(self) -> bool:
        """True when one period suffices to ramp the command to zero."""
        dt = 1.0 / self.params.controller_frequency
        return (
            abs(self.prev.linear) <= self.params.acc_lim_x * dt + 1e-12
            and abs(self.prev.angular) <= self.params.acc_lim_theta * dt + 1e-12
        )


def rollout(pose: Pose2D, v: float, omega: float, sim_time: float, granularity: float):
    """Poses along a constant-twist arc, sampled every `granularity` seconds."""
    n = max(1, int(round(sim_time / granularity)))
    t = granularity * np.arange(1, n + 1)
    theta = pose.theta + omega * t
    if abs(omega) < OMEGA_EPS:
        xs = pose.x + v * t * math.cos(pose.theta)
        ys = pose.y + v * t * math.sin(pose.theta)
    else:
        k = v / omega
        xs = pose.x + k * (np.sin(theta) - math.sin(pose.theta))
        ys = pose.y - k * (np.cos(theta) - math.cos(pose.theta))
    return xs, ys, theta


def _plan_xy(plan: Plan) -> np.ndarray:
    cached = getattr(plan, "_xy", None)
    if cached is None or len(cached) != len(plan.poses):
        cached = np.array([[p.x, p.y] for p in plan.poses])
        plan._xy = cached
    return cached


def local_goal_pose(plan: Plan, robot: Pose2D, costmap: Costmap) -> Pose2D:
    """Farthest plan pose inside the local window, from the nearest one on."""
    xy = _plan_xy(plan)
    d = np.hypot(xy[:, 0] - robot.x, xy[:, 1] - robot.y)
    i0 = int(np.argmin(d))
    target = plan.poses[i0]
    for pose in plan.poses[i0:]:
        ix, iy = costmap.world_to_cell(pose.x, pose.y)
        if not costmap.in_bounds(ix, iy):
            break
        target = pose
    return target


def sample_candidates(prev: Twist, heading_error: float, params: ParamSet) -> list[Twist]:
    """Reachable candidate twists for this control period."""
    dt = 1.0 / params.controller_frequency
    dv = params.acc_lim_x * dt
    dw = params.acc_lim_theta * dt
    v_lo, v_hi = prev.linear - dv, prev.linear + dv

    if params.max_vel_x > params.min_vel_x:
        v_targets = np.linspace(params.min_vel_x, params.max_vel_x, params.vx_samples)
    else:
        v_targets = np.array([params.max_vel_x])
    n_theta = params.vtheta_samples + (params.vtheta_samples % 2 == 0)  # odd => includes 0
    w_targets = np.linspace(params.min_vel_theta, params.max_vel_theta, n_theta)

    out: list[Twist] = []
    seen: set[tuple[float, float]] = set()
    for v_t in v_targets:
        v = min(max(float(v_t), v_lo), v_hi)
        for w_t in w_targets:
            w = min(max(float(w_t), prev.angular - dw), prev.angular + dw)
            key = (v, w)
            if key not in seen:
                seen.add(key)
                out.append(Twist(v, w))
    if abs(heading_error) > params.yaw_goal_tolerance:
        v = min(max(0.0, v_lo), v_hi)
        for w_t in (params.min_in_place_vel_theta, -params.min_in_place_vel_theta):
            w = min(max(w_t, prev.angular - dw), prev.angular + dw)
            key = (v, w)
            if key not in seen:
                seen.add(key)
                out.append(Twist(v, w))
    return out


def check_trajectory(
    costmap: Costmap, pose: Pose2D, cmd: Twist, sim_time: float, granularity: float
) -> int | None:
    """Max cost along the rollout, or None if it enters the blocked band."""
    xs, ys, _ = rollout(pose, cmd.linear, cmd.angular, sim_time, granularity)
    costs = costmap.costs_at(xs, ys, default=0)
    worst = int(costs.max()) if len(costs) else 0
    if worst >= INSCRIBED:
        return None
    return worst


# beyond this heading error, arcing forward at the fixed cruise floor only
# drives away from the plan: rotate in place first
ROTATE_IN_PLACE_THRESHOLD = math.pi / 2


def compute_velocity(
    local_costmap: Costmap,
    plan: Plan,
    pose: Pose2D,
    prev_cmd: Twist,
    params: ParamSet,
) -> Twist:
    """Pick the best collision-free twist for the next control period."""
    if not plan.poses:
        raise NoValidTrajectory("empty plan")
    target = local_goal_pose(plan, pose, local_costmap)
    if pose.distance_to(target) > 1e-9:
        bearing = math.atan2(target.y - pose.y, target.x - pose.x)
    else:
        bearing = target.theta
    heading_error = wrap_angle(bearing - pose.theta)

    if abs(heading_error) > ROTATE_IN_PLACE_THRESHOLD:
        dt = 1.0 / params.controller_frequency
        dv = params.acc_lim_x * dt
        dw = params.acc_lim_theta * dt
        cand = Twist(
            min(max(0.0, prev_cmd.linear - dv), prev_cmd.linear + dv),
            min(
                max(
                    math.copysign(params.min_in_place_vel_theta, heading_error),
                    prev_cmd.angular - dw,
                ),
                prev_cmd.angular + dw,
            ),
        )
        if (
            check_trajectory(local_costmap, pose, cand, params.sim_time, params.sim_granularity)
            is None
        ):
            raise NoValidTrajectory("rotation in place enters the collision band")
        return cand

    plan_xy = _plan_xy(plan)
    best = None
    best_key = None
    for cand in sample_candidates(prev_cmd, heading_error, params):
        xs, ys, thetas = rollout(
            pose, cand.linear, cand.angular, params.sim_time, params.sim_granularity
        )
        costs = local_costmap.costs_at(xs, ys, default=0)
        worst = int(costs.max())
        if worst >= INSCRIBED:
            continue
        end_x, end_y, end_theta = float(xs[-1]), float(ys[-1]), float(thetas[-1])
        pdist = float(np.hypot(plan_xy[:, 0] - end_x, plan_xy[:, 1] - end_y).min())
        gdist = math.hypot(target.x - end_x, target.y - end_y)
        score = (
            params.pdist_scale * pdist
            + params.gdist_scale * gdist
            + params.occdist_scale * worst
        )
        err_after = abs(wrap_angle(bearing - end_theta))
        key = (score, err_after, abs(cand.angular), cand.angular, cand.linear)
        if best_key is None or key < best_key:
            best_key = key
            best = cand
    if best is None:
        raise NoValidTrajectory("all sampled trajectories enter the collision band")
    return best


def recovery_escape(params: ParamSet) -> Twist:
    """Reverse command used after 'no valid trajectory' (bounded duration)."""
    return Twist(params.escape_vel, 0.0)
