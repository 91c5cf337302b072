"""Dead-reckoning odometry for a differential-drive base.

Wheel speeds determine the rotation rate about the instantaneous center
of curvature, omega = (V_r - V_l) / D, the turn radius R = (D/2)(V_r +
V_l)/(V_r - V_l), and the body speed V_s = (V_l + V_r)/2 (so V_s =
omega * R whenever R is finite). Poses advance by the closed-form
constant-velocity arc, which equals the time integral of (V_s cos theta,
V_s sin theta, omega) for piecewise-constant wheel speeds, so accuracy
does not depend on the step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .drive import EncoderEvent, Wheel, tick_distance
from .types import Pose2D, Twist, wrap_angle

# below this |omega| the arc formula is numerically unstable and the
# straight-line limit is exact to first order
OMEGA_EPS = 1e-9


class OdometryError(ValueError):
    pass


@dataclass(frozen=True)
class OdometryState:
    pose: Pose2D = field(default_factory=Pose2D)
    v_s: float = 0.0
    omega: float = 0.0
    R: float = math.inf   # turn radius; inf when driving straight
    stamp: float = 0.0


def icc(v_left: float, v_right: float, track_width: float) -> tuple[float, float]:
    """Rotation rate and turn radius about the instantaneous center.

    Returns (omega, R); R is math.inf for straight-line motion. R's sign
    follows omega's denominator (V_r - V_l), which keeps V_s = omega * R
    consistent with the wheel-speed relations.
    """
    if track_width <= 0:
        raise OdometryError("track width must be > 0")
    diff = v_right - v_left
    omega = diff / track_width
    if diff == 0.0:
        return 0.0, math.inf
    R = (track_width / 2.0) * (v_right + v_left) / diff
    return omega, R


def center_velocity(v_left: float, v_right: float) -> float:
    """Body-center speed: mean of the wheel speeds."""
    return (v_left + v_right) / 2.0


def arc_step(pose: Pose2D, v_s: float, omega: float, dt: float) -> Pose2D:
    """Advance a pose along a constant (v_s, omega) arc for dt seconds."""
    theta1 = pose.theta + omega * dt
    if abs(omega) < OMEGA_EPS:
        x = pose.x + v_s * math.cos(pose.theta) * dt
        y = pose.y + v_s * math.sin(pose.theta) * dt
    else:
        k = v_s / omega
        x = pose.x + k * (math.sin(theta1) - math.sin(pose.theta))
        y = pose.y - k * (math.cos(theta1) - math.cos(pose.theta))
    return Pose2D(x, y, wrap_angle(theta1))


def integrate_step(
    state: OdometryState,
    v_left: float,
    v_right: float,
    track_width: float,
    dt: float,
) -> OdometryState:
    """One dead-reckoning update from constant wheel speeds over dt."""
    if dt <= 0:
        raise OdometryError("dt must be > 0")
    omega, R = icc(v_left, v_right, track_width)
    v_s = center_velocity(v_left, v_right)
    pose = arc_step(state.pose, v_s, omega, dt)
    return OdometryState(pose, v_s, omega, R, state.stamp + dt)


def update_from_ticks(
    state: OdometryState,
    left: EncoderEvent,
    right: EncoderEvent,
    wheel_radius: float,
    track_width: float,
    ticks_per_rev: int = 36,
) -> OdometryState:
    """Advance from one paired encoder reading per wheel.

    Wheel speed is ticks * tick_distance / pulse_width. The integration
    interval is the shorter of the two pulse widths (the wheels report
    asynchronously; the common interval is the part both speeds cover).
    """
    if left.wheel is not Wheel.LEFT or right.wheel is not Wheel.RIGHT:
        raise OdometryError("events must be (left, right)")
    if left.ticks == 0 and right.ticks == 0:
        return state
    d = tick_distance(wheel_radius, ticks_per_rev)
    intervals = []
    v = {}
    for ev in (left, right):
        if ev.ticks == 0:
            v[ev.wheel] = 0.0
        else:
            v[ev.wheel] = ev.ticks * d / ev.pulse_width
            intervals.append(ev.pulse_width)
    dt = min(intervals)
    return integrate_step(state, v[Wheel.LEFT], v[Wheel.RIGHT], track_width, dt)


@dataclass
class OdomMessage:
    """What gets published on /odom: pose, body twist, and the stamp."""

    pose: Pose2D
    twist: Twist
    stamp: float


class WheelOdometry:
    """Stateful tracker fed by encoder events, sampled at loop boundaries.

    feed() accumulates signed ticks per wheel; sample(stamp) converts the
    accumulated counts since the previous sample into wheel speeds over
    that interval and advances the pose. Sampling on a fixed clock keeps
    the two wheels time-aligned regardless of how their ticks interleave.
    """

    def __init__(
        self,
        wheel_radius: float,
        track_width: float,
        ticks_per_rev: int = 36,
        start: Pose2D = Pose2D(),
    ):
        self.wheel_radius = wheel_radius
        self.track_width = track_width
        self.ticks_per_rev = ticks_per_rev
        self.state = OdometryState(pose=start)
        self._pending = {Wheel.LEFT: 0, Wheel.RIGHT: 0}
        self._tick_dist = tick_distance(wheel_radius, ticks_per_rev)

    def feed(self, event: EncoderEvent) -> None:
        self._pending[event.wheel] += event.ticks

    def sample(self, stamp: float) -> OdometryState:
        dt = stamp - self.state.stamp
        if dt < 0:
            raise OdometryError("sample stamps must not go backwards")
        if dt == 0:
            return self.state
        v_l = self._pending[Wheel.LEFT] * self._tick_dist / dt
        v_r = self._pending[Wheel.RIGHT] * self._tick_dist / dt
        self._pending = {Wheel.LEFT: 0, Wheel.RIGHT: 0}
        self.state = integrate_step(self.state, v_l, v_r, self.track_width, dt)
        return self.state

    def message(self) -> OdomMessage:
        s = self.state
        return OdomMessage(s.pose, Twist(s.v_s, s.omega), s.stamp)

    def reset(self, pose: Pose2D = Pose2D(), stamp: float = 0.0) -> None:
        self.state = OdometryState(pose=pose, stamp=stamp)
        self._pending = {Wheel.LEFT: 0, Wheel.RIGHT: 0}


def publish_odom(bus, state: OdometryState, topic: str = "/odom") -> OdomMessage:
    msg = OdomMessage(state.pose, Twist(state.v_s, state.omega), state.stamp)
    bus.publish(topic, msg)
    return msg
