"""Closed-loop stack runner: one deterministic control loop over the bus.

Per control period (1/controller_frequency): advance the simulator with
the previous command, feed encoder events into odometry, integrate due
scans into the map at known poses, refresh costmaps, advance the behavior
machine (exploration / approach / photo), then let exactly one producer
(rotation controller, navigator, or teleop) emit the next command. All
commands pass through one shared rate limiter so consecutive /cmd_vel
messages always respect the acceleration limits.

The same runner backs the headless CLI, the acceptance scenarios, and the
websocket gateway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .behavior import (
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
from .bus import TopicBus
from .costmap import INSCRIBED, Costmap, Footprint, build_costmap
from .drive import EncoderEvent
from .explore import find_frontiers, rank_frontiers
from .local_planner import CommandLimiter, NavGoal, clamp_to_accel
from .mapping import Mapper, MapperConfig
from .navigator import Navigator, NavState, NavStatus
from .odometry import OdomMessage, WheelOdometry
from .params import ParamSet
from .transforms import default_robot_tree
from .types import FREE, LaserScan, Pose2D, TriStateMap, Twist
from .world import Detection, ScanConfig, Simulator, World


class RotationController:
    """In-place full turn, braking to a stop on completion."""

    def __init__(self, params: ParamSet, total: float = 2.0 * math.pi, direction: float = 1.0):
        self.params = params
        self.remaining = total
        self.direction = math.copysign(1.0, direction)
        self.done = False

    def target(self, limiter: CommandLimiter) -> Twist:
        dt = 1.0 / self.params.controller_frequency
        if self.remaining <= 1e-3 and limiter.stoppable():
            self.done = True
            return Twist(0.0, 0.0)
        w = math.sqrt(max(2.0 * self.params.acc_lim_theta * self.remaining, 0.0))
        w = min(w, self.params.max_vel_theta, self.params.min_in_place_vel_theta)
        cmd_w = clamp_to_accel(Twist(0.0, self.direction * w), limiter.prev, self.params).angular
        self.remaining = max(0.0, self.remaining - abs(cmd_w) * dt)
        return Twist(0.0, self.direction * w)


@dataclass
class RunResult:
    status: NavStatus | None
    collisions: int
    sim_time: float
    photos: list = field(default_factory=list)
    exploration_complete: bool = False


class Stack:
    """Everything wired together around one simulator instance."""

    def __init__(
        self,
        world: World,
        start: Pose2D,
        params: ParamSet | None = None,
        seed: int = 0,
        photo_dir: str | Path | None = None,
        map_with_ground_truth: bool = False,
        rotate_on_arrival: bool = True,
    ):
        self.params = params or ParamSet()
        p = self.params
        self.bus = TopicBus()
        for topic, msg_type in (
            ("/encoder", EncoderEvent),
            ("/odom", OdomMessage),
            ("/scan", LaserScan),
            ("/cmd_vel", Twist),
            ("/wheel_cmd", tuple),
            ("/keys", str),
            ("/goal", NavGoal),
            ("/nav_status", NavStatus),
            ("/map", TriStateMap),
            ("/detections", Detection),
            ("/photo_event", object),
        ):
            self.bus.register(topic, msg_type)

        footprint = Footprint.from_list(p.footprint)
        self.footprint = footprint
        scan_cfg = ScanConfig(
            fov=p.scan_fov,
            beams=p.scan_beams,
            range_min=p.scan_range_min,
            range_max=p.scan_range_max,
            rate=p.scan_rate,
            noise_sigma=p.scan_noise_sigma,
        )
        self.sim = Simulator(
            world,
            start,
            wheel_radius=p.wheel_radius,
            track_width=p.track_width,
            ticks_per_rev=p.ticks_per_rev,
            scan_cfg=scan_cfg,
            robot_radius=footprint.circumscribed_radius(),
            seed=seed,
            false_positive_rate=p.false_positive_rate,
        )
        self.odom = WheelOdometry(p.wheel_radius, p.track_width, p.ticks_per_rev, start=start)
        self.mapper = Mapper(
            MapperConfig(
                l_hit=p.l_hit,
                l_miss=p.l_miss,
                l_min=p.l_min,
                l_max=p.l_max,
                occupied_threshold=p.occupied_threshold,
                free_threshold=p.free_threshold,
                resolution=p.resolution,
            ),
            center=start,
        )
        self.limiter = CommandLimiter(p)
        self.navigator = Navigator(p, limiter=self.limiter)
        self.transforms = default_robot_tree()
        self.map_with_ground_truth = map_with_ground_truth
        self.rotate_on_arrival = rotate_on_arrival
        self.photo_dir = photo_dir

        self.dt = 1.0 / p.controller_frequency
        self.collisions = 0
        self.cmd_log: list[Twist] = []
        self.photos: list = []
        self.behavior = BehaviorState(cooldown=p.photo_cooldown)
        self._keys = self.bus.subscribe("/keys")
        self._goals = self.bus.subscribe("/goal")
        self._teleop_cmd: Twist | None = None
        self._rotation: RotationController | None = None
        self._goal_kind: str | None = None
        self._map_version = 0
        self._frontier_version = -1
        self._frontiers: list = []
        self._tri: TriStateMap | None = None
        self._tri_version = -1
        self._global_cm: Costmap | None = None
        self._global_cm_time = -math.inf
        self._scan_index = 0
        self._map_stride = max(1, round(p.scan_rate / p.mapping_rate))
        self._last_status: tuple | None = None
        self._last_detections: dict[str, Detection] = {}
        self._blacklist: list[tuple[float, float, float]] = []
        self._behavior_enabled = False

        # seed the map with the first scan so planning has something to chew on
        self._integrate_scan(self.sim.scan())

    # -- pose plumbing -------------------------------------------------------

    @property
    def pose(self) -> Pose2D:
        """Pose estimate used for planning and mapping (dead reckoning)."""
        return self.odom.state.pose

    @property
    def ground_truth(self) -> Pose2D:
        return self.sim.pose

    def _map_pose(self) -> Pose2D:
        return self.sim.pose if self.map_with_ground_truth else self.odom.state.pose

    # -- map / costmap snapshots ----------------------------------------------

    def _integrate_scan(self, scan: LaserScan) -> None:
        self.mapper.integrate_scan(self._map_pose(), scan)
        self._map_version += 1

    def tristate(self) -> TriStateMap:
        if self._tri_version != self._map_version:
            self._tri = self.mapper.to_tristate()
            self._tri_version = self._map_version
        return self._tri

    def frontiers(self) -> list:
        if self._frontier_version != self._map_version:
            self._frontiers = find_frontiers(self.tristate(), self.params.min_frontier_size)
            self._frontier_version = self._map_version
        return self._frontiers

    def global_costmap(self) -> Costmap:
        if self._global_cm is None or self.bus.now - self._global_cm_time >= 0.5:
            self._global_cm = build_costmap(
                self.tristate(),
                self.footprint,
                self.params.inflation_radius,
                self.params.cost_scaling_factor,
            )
            self._global_cm_time = self.bus.now
        return self._global_cm

    def local_costmap(self) -> Costmap:
        return build_costmap(
            self.tristate(),
            self.footprint,
            self.params.inflation_radius,
            self.params.cost_scaling_factor,
            center=self.pose,
            window=(self.params.local_width, self.params.local_height),
        )

    # -- goals ----------------------------------------------------------------

    def set_goal(self, goal: NavGoal, kind: str = "user") -> None:
        preempted = self.navigator.set_goal(goal, self.bus.now)
        if preempted is not None:
            self.bus.publish("/nav_status", preempted)
        self._goal_kind = kind
        # unexplored space is plannable: the grid must reach the goal
        self.mapper.ensure_covers(
            goal.target.x - 0.5, goal.target.y - 0.5, goal.target.x + 0.5, goal.target.y + 0.5
        )
        self._map_version += 1
        self._global_cm = None  # plan against a fresh snapshot

    def _nav_signal(self, kind: str) -> NavSignal:
        if self._rotation is not None:
            return NavSignal.ACTIVE
        if self._goal_kind != kind:
            return NavSignal.NONE
        state = self.navigator.state
        if state in (NavState.PLANNING, NavState.MOVING, NavState.RECOVERING):
            return NavSignal.ACTIVE
        if state == NavState.SUCCEEDED:
            return NavSignal.SUCCEEDED
        if state == NavState.ABORTED:
            return NavSignal.ABORTED
        return NavSignal.NONE

    def _reset_navigator(self) -> None:
        self.navigator.cancel()
        self._goal_kind = None

    # -- behavior ---------------------------------------------------------------

    def _select_exploration_goal(self) -> NavGoal | None:
        """Best frontier, as a plannable vantage pose looking at it.

        Frontier cells often hug walls (the last unknown slivers sit at
        obstacle faces), so the goal is the nearest known-free cell outside
        the blocked cost band within a meter of the frontier, oriented
        toward it; scanning from there resolves the sliver. Frontiers with
        no such vantage are blacklisted for a while.
        """
        now = self.bus.now
        self._blacklist = [(x, y, t) for (x, y, t) in self._blacklist if t > now]
        frontiers = [
            f
            for f in self.frontiers()
            if not any(
                math.hypot(f.centroid.x - x, f.centroid.y - y) < 0.3 for (x, y, _) in self._blacklist
            )
        ]
        tri = self.tristate()
        cm = self.global_costmap()
        for frontier in rank_frontiers(frontiers, self.pose):
            goal = self._vantage_for(frontier, tri, cm)
            if goal is not None:
                return goal
            self._blacklist.append((frontier.centroid.x, frontier.centroid.y, now + 30.0))
        return None

    def _vantage_for(self, frontier, tri: TriStateMap, cm: Costmap) -> NavGoal | None:
        # the global costmap is built from this tri-state snapshot, so the
        # two share grid geometry and cell indices
        centers_x = tri.origin.x + (frontier.cells[:, 0] + 0.5) * tri.resolution
        centers_y = tri.origin.y + (frontier.cells[:, 1] + 0.5) * tri.resolution
        i = int(
            np.argmin(
                (centers_x - frontier.centroid.x) ** 2 + (centers_y - frontier.centroid.y) ** 2
            )
        )
        fx, fy = float(centers_x[i]), float(centers_y[i])
        gx, gy = cm.world_to_cell(fx, fy)
        reach = int(round(1.0 / cm.resolution))
        x0, x1 = max(0, gx - reach), min(cm.width, gx + reach + 1)
        y0, y1 = max(0, gy - reach), min(cm.height, gy + reach + 1)
        valid = (tri.cells[y0:y1, x0:x1] == FREE) & (cm.costs[y0:y1, x0:x1] < INSCRIBED)
        if not valid.any():
            return None
        ys, xs = np.nonzero(valid)
        d2 = (xs + x0 - gx) ** 2 + (ys + y0 - gy) ** 2
        j = int(np.argmin(d2))
        vx, vy = cm.cell_center(int(xs[j] + x0), int(ys[j] + y0))
        theta = math.atan2(fy - vy, fx - vx) if (vx, vy) != (fx, fy) else 0.0
        return NavGoal(
            Pose2D(vx, vy, theta),
            self.params.xy_goal_tolerance,
            self.params.yaw_goal_tolerance,
        )

    def _run_behavior_cycle(self, detections: list) -> None:
        p = self.params
        now = self.bus.now
        for det in detections:
            self._last_detections[det.person_id] = det

        # exploration legs end with a look-around turn before the next frontier
        if (
            self._goal_kind == "explore"
            and self.navigator.state == NavState.SUCCEEDED
            and self.rotate_on_arrival
            and self._rotation is None
        ):
            self._rotation = RotationController(p)
            self._reset_navigator()
        if self._goal_kind == "explore" and self.navigator.state == NavState.ABORTED:
            goal = self.navigator.goal
            if goal is not None:
                self._blacklist.append((goal.target.x, goal.target.y, now + 30.0))
            self._reset_navigator()

        # fresh scan evidence can re-open a frontier after the machine went
        # idle (cells flip class as more hits/misses arrive): re-arm it
        if self.behavior.mode == Mode.IDLE and self.frontiers():
            self.behavior = replace(self.behavior, mode=Mode.EXPLORING)

        mode = self.behavior.mode
        signal = self._nav_signal("approach" if mode == Mode.APPROACHING else "explore")
        inputs = BehaviorInputs(
            detections=tuple(detections),
            nav=signal,
            frontiers_available=bool(self.frontiers()) if mode != Mode.APPROACHING else False,
            rotation_complete=self._rotation is None,
            now=now,
        )
        self.behavior, actions = behavior_step(self.behavior, inputs)
        for action in actions:
            if isinstance(action, ApproachPerson):
                self._rotation = None
                goal = face_to_goal(
                    action.detection,
                    self.pose,
                    standoff=p.photo_standoff,
                    transforms=self.transforms,
                    xy_tolerance=p.xy_goal_tolerance,
                    yaw_tolerance=p.yaw_goal_tolerance,
                )
                self.set_goal(goal, kind="approach")
            elif isinstance(action, RequestExplorationGoal):
                goal = self._select_exploration_goal()
                if goal is not None:
                    self.set_goal(goal, kind="explore")
            elif isinstance(action, TakePhoto):
                det = self._last_detections.get(action.person_id)
                record = capture_photo(
                    self.tristate(),
                    action.person_id,
                    self.pose,
                    det,
                    now,
                    self.photo_dir,
                    index=len(self.photos),
                )
                self.photos.append(record)
                self.bus.publish("/photo_event", record)
                self._reset_navigator()
            elif isinstance(action, StartRotation):
                self._rotation = RotationController(p)

    # -- the loop -----------------------------------------------------------------

    def step(self) -> None:
        """One control period."""
        p = self.params
        result = self.sim.step(self.dt)
        if result.collision:
            self.collisions += 1
        for ev in result.events:
            self.bus.publish("/encoder", ev)
            self.odom.feed(ev)
        self.odom.sample(self.sim.time)
        self.bus.publish("/odom", self.odom.message())
        if result.scan is not None:
            self.bus.publish("/scan", result.scan)
            if self._scan_index % self._map_stride == 0:
                self._integrate_scan(result.scan)
            self._scan_index += 1

        # external goal messages (gateway / console)
        goal_msg = self._goals.latest()
        if goal_msg is not None:
            self.set_goal(goal_msg, kind="user")

        if self._behavior_enabled:
            detections = self.sim.detect(
                p.detect_max_range, p.detect_half_angle, p.frontal_half_angle
            )
            for det in detections:
                self.bus.publish("/detections", det)
            self._run_behavior_cycle(detections)

        # exactly one command producer per cycle
        if self._rotation is not None:
            cmd = self.limiter.emit(self._rotation.target(self.limiter))
            if self._rotation.done:
                self._rotation = None
        elif self.navigator.state not in (NavState.IDLE, NavState.SUCCEEDED, NavState.ABORTED):
            cmd = self.navigator.step(
                self.bus.now, self.pose, self.global_costmap(), self.local_costmap()
            )
        else:
            key = self._keys.latest()
            if key is not None:
                mapped = keys_to_twist(key, p)
                if mapped is not None:
                    self._teleop_cmd = mapped
            target = self._teleop_cmd if self._teleop_cmd is not None else Twist(0.0, 0.0)
            cmd = self.limiter.emit(target)

        self.bus.publish("/cmd_vel", cmd)
        self.cmd_log.append(cmd)
        half = 0.5 * cmd.angular * p.track_width
        self.bus.publish("/wheel_cmd", (cmd.linear - half, cmd.linear + half))
        self.sim.set_twist(cmd)
        self._publish_status()
        self.bus.advance(self.dt)

    def _publish_status(self) -> None:
        status = self.navigator.status()
        key = (status.state, status.goal_id, status.reason)
        if key != self._last_status:
            self.bus.publish("/nav_status", status)
            self._last_status = key

    # -- run helpers -----------------------------------------------------------------

    def run_goal(self, goal: NavGoal, sim_budget: float = 120.0) -> RunResult:
        """Drive one goal to a terminal state (or until the budget expires)."""
        for _ in self.execute_goal(goal, sim_budget):
            pass
        return RunResult(
            status=self.navigator.status(),
            collisions=self.collisions,
            sim_time=self.sim.time,
            photos=list(self.photos),
        )

    def execute_goal(self, goal: NavGoal, sim_budget: float = 120.0):
        """Drive one goal, yielding a NavStatus on every state transition."""
        sub = self.bus.subscribe("/nav_status", maxlen=64)
        self.set_goal(goal, kind="user")
        steps = int(round(sim_budget / self.dt))
        for _ in range(steps):
            self.step()
            yield from sub.drain()
            if self.navigator.state.terminal and self.limiter.prev == Twist(0.0, 0.0):
                break

    def run_behavior(self, sim_budget: float = 300.0) -> RunResult:
        """Explore / approach / photograph until idle or out of budget."""
        self._behavior_enabled = True
        steps = int(round(sim_budget / self.dt))
        complete = False
        for _ in range(steps):
            self.step()
            if self.behavior.mode == Mode.IDLE and self.limiter.prev == Twist(0.0, 0.0):
                complete = True
                break
        return RunResult(
            status=self.navigator.status(),
            collisions=self.collisions,
            sim_time=self.sim.time,
            photos=list(self.photos),
            exploration_complete=complete,
        )

    run_exploration = run_behavior
