"""Differential-drive navigation stack with a deterministic 2D simulator.

Library layout:

- types / bus / params / transforms: shared domain types, the in-process
  topic bus, the tuned parameter set, and the planar frame tree
- drive: motor pulse-width model and quadrature encoder decoding
- odometry: dead reckoning from wheel speeds and encoder ticks
- world: the simulator (kinematics, encoder emulation, ray-cast scans,
  person beacons, scenario files)
- mapping: log-odds occupancy grids and the map file format
- costmap / planner / local_planner / navigator: costmaps with inflation,
  A* global planning, trajectory-rollout control, goal execution
- explore / behavior: frontier exploration and the photo-taking behavior
- runner: the closed-loop control cycle used by the CLI and the gateway
- gateway: JSON-over-websocket bridge for the operator console
"""

from .bus import TopicBus
from .costmap import Costmap, Footprint, build_costmap, inflate
from .drive import EncoderEvent, MotorCalibration, QuadratureDecoder, Wheel
from .explore import Frontier, find_frontiers, select_exploration_goal
from .local_planner import NavGoal, compute_velocity, goal_reached
from .mapping import Mapper, MapperConfig, load_map, occupancy_probability, save_map, to_tristate
from .navigator import Navigator, NavState, NavStatus
from .odometry import OdometryState, WheelOdometry, icc, integrate_step, update_from_ticks
from .params import ParamSet, load_params, save_params
from .planner import Plan, plan_global
from .runner import Stack
from .transforms import Transform, TransformTree, compose, default_robot_tree, invert
from .types import LaserScan, OccupancyGrid, Pose2D, TriStateMap, Twist, wrap_angle
from .world import (
    Detection,
    PersonBeacon,
    ScanConfig,
    Simulator,
    World,
    detect_faces,
    load_scenario,
    raycast_scan,
    scenario_path,
)

__version__ = "0.1.0"
