"""Autonomous navigation around an obstacle.

Closed loop: encoder odometry localizes, scans build the map, the global
planner routes around the central boxes, and the rollout controller
drives at the fixed 0.175 m/s cruise under the acceleration limits. The
goal sits behind the obstacle, so the robot must discover it and detour.

Run:  python demos/03_navigation.py
Writes demos/out/navigation.png
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from navsim.local_planner import NavGoal
from navsim.params import ParamSet
from navsim.runner import Stack
from navsim.types import Pose2D
from navsim.world import load_scenario, scenario_path

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

world, start = load_scenario(scenario_path("boxes"))
params = ParamSet(scan_beams=181)
stack = Stack(world, start, params, seed=1)
goal = NavGoal(Pose2D(6.8, 3.0, 0.0))

trail = []
speeds = []
for status in stack.execute_goal(goal, sim_budget=120.0):
    print(f"[{stack.sim.time:7.2f}s] {status.state.value}"
          + (f" ({status.reason})" if status.reason else ""))
# re-run recording the trail (the generator above consumed the run)
stack = Stack(world, start, params, seed=1)
stack.set_goal(goal)
for _ in range(int(120.0 / stack.dt)):
    stack.step()
    trail.append((stack.ground_truth.x, stack.ground_truth.y))
    speeds.append(stack.limiter.prev.linear)
    if stack.navigator.state.terminal and speeds[-1] == 0.0:
        break

gt = stack.ground_truth
print(f"\nfinal pose ({gt.x:.2f}, {gt.y:.2f}, {gt.theta:.2f}), "
      f"{stack.ground_truth.distance_to(goal.target):.3f} m from goal, "
      f"collisions: {stack.collisions}")

fig, (ax1, ax2) = plt.subplots(
    1, 2, figsize=(12, 5), gridspec_kw={"width_ratios": [3, 2]}
)
tri = stack.tristate()
extent = (
    tri.origin.x,
    tri.origin.x + tri.width * tri.resolution,
    tri.origin.y,
    tri.origin.y + tri.height * tri.resolution,
)
ax1.imshow(tri.cells, origin="lower", cmap="gray", vmin=0, vmax=254, extent=extent)
ax1.plot(*zip(*trail), "tab:blue", lw=2, label="driven path")
ax1.plot(start.x, start.y, "go", label="start")
ax1.plot(goal.target.x, goal.target.y, "r*", markersize=14, label="goal")
ax1.set_title("map + driven trajectory")
ax1.legend(loc="upper left")
ax1.set_aspect("equal")

t = [i / params.controller_frequency for i in range(len(speeds))]
ax2.plot(t, speeds)
ax2.set_xlabel("time [s]")
ax2.set_ylabel("commanded v [m/s]")
ax2.set_title("acceleration-limited cruise at 0.175 m/s")
fig.tight_layout()
fig.savefig(OUT / "navigation.png", dpi=120)
print(f"wrote {OUT / 'navigation.png'}")
