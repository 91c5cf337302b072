"""Motor control and wheel encoder models.

The motor layer is a proportional map between servo pulse width and wheel
speed: RPM = K * PW, so V = (2*pi*r/60) * K * PW. Pulse widths are signed
offsets from the controller's neutral point, and out-of-range commands are
clamped with an explicit flag rather than silently.

The encoder layer: each wheel gives 36 pulses per revolution, so one tick
is 1/36 of the wheel circumference; speed is tick distance over the pulse
width. Direction comes from the phase order of the two encoder channels,
decoded with the standard 4-state Gray-code table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .types import Twist


class DriveError(ValueError):
    pass


@dataclass(frozen=True)
class MotorCalibration:
    """Proportionality constant K (RPM per ms of pulse width) plus geometry.

    pw_min/pw_neutral/pw_max are absolute servo pulse widths in ms; command
    pulse widths are signed offsets from pw_neutral (0 = stopped).
    """

    K: float
    wheel_radius: float
    pw_min: float = 1.0
    pw_max: float = 2.0
    pw_neutral: float = 1.5

    def __post_init__(self):
        if self.K <= 0:
            raise DriveError("K must be > 0")
        if not (self.pw_min < self.pw_neutral < self.pw_max):
            raise DriveError("need pw_min < pw_neutral < pw_max")

    @property
    def offset_lo(self) -> float:
        return self.pw_min - self.pw_neutral

    @property
    def offset_hi(self) -> float:
        return self.pw_max - self.pw_neutral


def calibrate_k(rpm_measured: float, pw: float) -> float:
    """K from a tachometer reading at a known pulse width."""
    if pw <= 0:
        raise DriveError("pulse width must be > 0 to calibrate K")
    if rpm_measured < 0:
        raise DriveError("measured RPM must be >= 0")
    return rpm_measured / pw


def pulse_width_to_velocity(pw: float, calib: MotorCalibration) -> tuple[float, bool]:
    """Wheel speed for a signed pulse-width offset from neutral.

    Returns (velocity m/s, clamped) where clamped reports that pw was
    outside [pw_min, pw_max] and got clamped to the range edge.
    """
    clamped = False
    if pw < calib.offset_lo:
        pw, clamped = calib.offset_lo, True
    elif pw > calib.offset_hi:
        pw, clamped = calib.offset_hi, True
    v = (2.0 * math.pi * calib.wheel_radius / 60.0) * calib.K * pw
    return v, clamped


def velocity_to_pulse_width(v: float, calib: MotorCalibration) -> tuple[float, bool]:
    """Inverse of pulse_width_to_velocity, clamped to the achievable range."""
    pw = v * 60.0 / (2.0 * math.pi * calib.wheel_radius * calib.K)
    if pw < calib.offset_lo:
        return calib.offset_lo, True
    if pw > calib.offset_hi:
        return calib.offset_hi, True
    return pw, False


def twist_to_wheel_speeds(cmd: Twist, track_width: float) -> tuple[float, float]:
    """Split a body twist into (V_left, V_right) wheel speeds."""
    if track_width <= 0:
        raise DriveError("track width must be > 0")
    half = 0.5 * cmd.angular * track_width
    return cmd.linear - half, cmd.linear + half


def wheel_speeds_to_twist(v_left: float, v_right: float, track_width: float) -> Twist:
    if track_width <= 0:
        raise DriveError("track width must be > 0")
    return Twist((v_left + v_right) / 2.0, (v_right - v_left) / track_width)


def tick_distance(wheel_radius: float, ticks_per_rev: int = 36) -> float:
    """Distance rolled per encoder tick: circumference / ticks_per_rev."""
    if wheel_radius <= 0:
        raise DriveError("wheel radius must be > 0")
    if ticks_per_rev <= 0:
        raise DriveError("ticks_per_rev must be > 0")
    return 2.0 * math.pi * wheel_radius / ticks_per_rev


def wheel_speed_from_pulse(d: float, t: float) -> float:
    """Speed over one tick: distance d in pulse width t."""
    if t <= 0:
        raise DriveError("pulse width must be > 0")
    return d / t


class Wheel(Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass
class EncoderEvent:
    wheel: Wheel
    ticks: int            # signed tick count, +1 per forward tick
    pulse_width: float    # seconds since this wheel's previous tick
    stamp: float

    def __post_init__(self):
        if self.ticks != 0 and self.pulse_width <= 0:
            raise DriveError("pulse_width must be > 0 for a non-empty event")


class Edge(Enum):
    A_RISE = "A-rise"
    A_FALL = "A-fall"
    B_RISE = "B-rise"
    B_FALL = "B-fall"


# Gray-code cycle (A, B): forward order when channel A leads channel B.
_FORWARD_CYCLE = [(0, 0), (1, 0), (1, 1), (0, 1)]


class QuadratureDecoder:
    """Two-channel quadrature decoder.

    Valid edges step the (A, B) state around the Gray-code cycle; A-before-B
    order counts +1 per edge, the mirrored order counts -1. An edge that does
    not match the current channel level (e.g. A-rise while A is already high)
    is reported as invalid and leaves the tick count untouched.
    """

    def __init__(self, level_a: int = 0, level_b: int = 0):
        self.level_a = level_a
        self.level_b = level_b
        self.ticks = 0

    @property
    def state(self) -> tuple[int, int]:
        return (self.level_a, self.level_b)

    def decode(self, edge: Edge) -> int | None:
        """Apply one edge; returns +1, -1, or None for an invalid edge."""
        a, b = self.level_a, self.level_b
        if edge is Edge.A_RISE:
            if a == 1:
                return None
            new = (1, b)
        elif edge is Edge.A_FALL:
            if a == 0:
                return None
            new = (0, b)
        elif edge is Edge.B_RISE:
            if b == 1:
                return None
            new = (a, 1)
        else:
            if b == 0:
                return None
            new = (a, 0)
        i_old = _FORWARD_CYCLE.index((a, b))
        direction = 1 if _FORWARD_CYCLE[(i_old + 1) % 4] == new else -1
        self.level_a, self.level_b = new
        self.ticks += direction
        return direction
