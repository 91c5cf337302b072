import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from navsim.types import LaserScan, Pose2D, wrap_angle


def test_wrap_angle_basics():
    assert wrap_angle(0.0) == 0.0
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)  # (-pi, pi]: -pi maps to pi
    assert wrap_angle(2 * math.pi) == pytest.approx(0.0, abs=1e-15)
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_wrap_angle_range(theta):
    w = wrap_angle(theta)
    assert -math.pi < w <= math.pi
    # same direction modulo a full turn
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-6)
    assert math.isclose(math.sin(w), math.sin(theta), abs_tol=1e-6)


def test_pose_normalized_keeps_theta_in_range():
    p = Pose2D(1.0, 2.0, 7.0).normalized()
    assert -math.pi < p.theta <= math.pi


def test_laserscan_length_invariant():
    scan = LaserScan(
        angle_min=-0.5,
        angle_max=0.5,
        angle_increment=0.25,
        range_min=0.1,
        range_max=5.0,
        ranges=[1.0, 1.0, 1.0, 1.0, 1.0],
    )
    assert len(scan.ranges) == 5
    with pytest.raises(ValueError):
        LaserScan(
            angle_min=-0.5,
            angle_max=0.5,
            angle_increment=0.25,
            range_min=0.1,
            range_max=5.0,
            ranges=[1.0, 1.0],
        )


def test_laserscan_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        LaserScan(
            angle_min=0.0,
            angle_max=0.1,
            angle_increment=0.1,
            range_min=0.5,
            range_max=4.0,
            ranges=[9.0, 1.0],
        )
    # sentinel readings are fine
    scan = LaserScan(
        angle_min=0.0,
        angle_max=0.1,
        angle_increment=0.1,
        range_min=0.5,
        range_max=4.0,
        ranges=[math.inf, 1.0],
    )
    assert np.isinf(scan.ranges[0])
