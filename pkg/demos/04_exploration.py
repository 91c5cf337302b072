"""Frontier exploration of a room with an interior wall.

The robot starts with a blank map and repeatedly drives to the best
frontier (near and large first), sweeping a full turn on arrival, until
no frontier of meaningful size remains.

Run:  python demos/04_exploration.py
Writes demos/out/exploration.png
"""

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy import ndimage

from navsim.explore import find_frontiers
from navsim.params import ParamSet
from navsim.runner import Stack
from navsim.types import FREE
from navsim.world import rasterize_world, scenario_path, world_from_dict

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

data = json.loads(scenario_path("empty_room").read_text())
data["obstacles"].append({"type": "rect", "x": 2.9, "y": 0.15, "width": 0.15, "height": 2.7})
world, start = world_from_dict(data)

params = ParamSet(scan_beams=181)
stack = Stack(world, start, params, seed=3)
stack._behavior_enabled = True

trail = []
snapshots = {}
budget_steps = int(300.0 / stack.dt)
for i in range(budget_steps):
    stack.step()
    trail.append((stack.ground_truth.x, stack.ground_truth.y))
    for mark in (30.0, 90.0):
        if abs(stack.sim.time - mark) < stack.dt / 2:
            snapshots[mark] = stack.tristate().cells.copy()
    from navsim.behavior import Mode
    from navsim.types import Twist

    if stack.behavior.mode == Mode.IDLE and stack.limiter.prev == Twist(0.0, 0.0):
        break

tri = stack.tristate()
snapshots[round(stack.sim.time, 1)] = tri.cells.copy()
frontiers = find_frontiers(tri, params.min_frontier_size)
occ = rasterize_world(world, tri.resolution, tri.origin, tri.width, tri.height)
labels, _ = ndimage.label(~occ, structure=np.ones((3, 3), int))
six, siy = tri.world_to_cell(start.x, start.y)
reachable = labels == labels[siy, six]
coverage = (tri.cells == FREE)[reachable].sum() / reachable.sum()

print(f"finished at {stack.sim.time:.1f} s sim")
print(f"frontiers remaining: {len(frontiers)}")
print(f"coverage: {coverage * 100:.1f}% of reachable free space classified free")
print(f"collisions: {stack.collisions}")

fig, axes = plt.subplots(1, len(snapshots), figsize=(5 * len(snapshots), 5))
for ax, (stamp, cells) in zip(np.atleast_1d(axes), sorted(snapshots.items())):
    ax.imshow(cells, origin="lower", cmap="gray", vmin=0, vmax=254)
    ax.set_title(f"t = {stamp:.0f} s")
    ax.set_xticks([])
    ax.set_yticks([])
last_ax = np.atleast_1d(axes)[-1]
res, ox, oy = tri.resolution, tri.origin.x, tri.origin.y
last_ax.plot([(x - ox) / res for x, y in trail], [(y - oy) / res for x, y in trail],
             "tab:blue", lw=1)
fig.suptitle("map growth during frontier exploration")
fig.tight_layout()
fig.savefig(OUT / "exploration.png", dpi=120)
print(f"wrote {OUT / 'exploration.png'}")
