"""Command-line entry points.

`navigate` runs one goal headless in a scenario and exits 0 on success;
`navsim-gateway` serves the JSON-over-websocket operator interface.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .local_planner import NavGoal
from .navigator import NavState
from .params import ParamSet, load_params
from .runner import Stack
from .types import Pose2D, wrap_angle
from .world import load_scenario, scenario_path


def _load_world(spec: str):
    path = Path(spec)
    if path.exists():
        return load_scenario(path)
    return load_scenario(scenario_path(spec))


def _parse_goal(text: str) -> Pose2D:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("goal must be x,y,theta")
    try:
        x, y, theta = (float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad goal: {exc}") from exc
    return Pose2D(x, y, wrap_angle(theta))


def navigate_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="navigate",
        description="Drive the robot to a goal in a simulated scenario, headless.",
    )
    parser.add_argument("--scenario", required=True, help="scenario file or bundled name")
    parser.add_argument("--params", help="parameter file (defaults to the tuned values)")
    parser.add_argument("--goal", required=True, type=_parse_goal, metavar="x,y,theta")
    parser.add_argument("--sim-budget", type=float, default=120.0, help="sim seconds before giving up")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    world, start = _load_world(args.scenario)
    params = load_params(args.params) if args.params else ParamSet()
    stack = Stack(world, start, params, seed=args.seed)
    goal = NavGoal(args.goal, params.xy_goal_tolerance, params.yaw_goal_tolerance)
    result = stack.run_goal(goal, sim_budget=args.sim_budget)
    state = result.status.state
    if not args.quiet:
        print(f"state: {state.value}" + (f" ({result.status.reason})" if result.status.reason else ""))
        gt = stack.ground_truth
        print(f"sim time: {result.sim_time:.2f} s, collisions: {result.collisions}")
        print(f"final pose: ({gt.x:.3f}, {gt.y:.3f}, {gt.theta:.3f})")
        print(f"goal distance: {gt.distance_to(goal.target):.3f} m")
    return 0 if state == NavState.SUCCEEDED and result.collisions == 0 else 1


def gateway_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="navsim-gateway",
        description="Serve the operator websocket gateway around a live scenario.",
    )
    parser.add_argument("--scenario", default="empty_room", help="scenario file or bundled name")
    parser.add_argument("--params", help="parameter file (defaults to the tuned values)")
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--behavior", action="store_true", help="run the photo-taking behavior")
    parser.add_argument("--photo-dir", default=None)
    args = parser.parse_args(argv)

    from .gateway import serve

    world, start = _load_world(args.scenario)
    params = load_params(args.params) if args.params else ParamSet()
    stack = Stack(world, start, params, seed=args.seed, photo_dir=args.photo_dir)
    if args.behavior:
        stack._behavior_enabled = True
    try:
        serve(stack, host=args.host, port=args.port)
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(navigate_main())
