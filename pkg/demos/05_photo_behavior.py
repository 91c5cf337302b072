"""The photo-taking behavior: explore, detect, approach, capture, resume.

A person stands in the room facing the door. The robot explores until
the frontal detection fires (3.0 m, frontal cone, clear line of sight),
navigates to a 1 m standoff, records the photo event with a local map
snapshot, turns a full circle, and goes back to exploring.

Run:  python demos/05_photo_behavior.py
Writes demos/out/photos/ and demos/out/photo_behavior.png
"""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from navsim.behavior import Mode
from navsim.params import ParamSet
from navsim.runner import Stack
from navsim.types import Twist
from navsim.world import load_scenario, scenario_path

OUT = Path(__file__).parent / "out"
PHOTOS = OUT / "photos"
OUT.mkdir(exist_ok=True)

world, start = load_scenario(scenario_path("person_room"))
person = world.persons[0]
params = ParamSet(scan_beams=181)
stack = Stack(world, start, params, seed=5, photo_dir=PHOTOS)
stack._behavior_enabled = True

trail = []
mode_changes = []
last_mode = stack.behavior.mode
for _ in range(int(240.0 / stack.dt)):
    stack.step()
    trail.append((stack.ground_truth.x, stack.ground_truth.y))
    if stack.behavior.mode != last_mode:
        mode_changes.append((stack.sim.time, stack.behavior.mode))
        last_mode = stack.behavior.mode
    if stack.behavior.mode == Mode.IDLE and stack.limiter.prev == Twist(0.0, 0.0):
        break

print("behavior timeline:")
for stamp, mode in mode_changes:
    print(f"  {stamp:7.2f}s  -> {mode.value}")
print(f"\nphotos: {len(stack.photos)}")
for record in stack.photos:
    dist = math.hypot(record.pose.x - person.pose.x, record.pose.y - person.pose.y)
    print(f"  {record.person_id} at t={record.stamp:.1f}s, {dist:.2f} m away, "
          f"snapshot {record.snapshot}")

fig, ax = plt.subplots(figsize=(7, 5))
tri = stack.tristate()
extent = (tri.origin.x, tri.origin.x + tri.width * tri.resolution,
          tri.origin.y, tri.origin.y + tri.height * tri.resolution)
ax.imshow(tri.cells, origin="lower", cmap="gray", vmin=0, vmax=254, extent=extent)
ax.plot(*zip(*trail), "tab:blue", lw=1.5, label="trajectory")
ax.plot(start.x, start.y, "go", label="start")
ax.plot(person.pose.x, person.pose.y, "r^", markersize=12, label="person")
for record in stack.photos:
    ax.plot(record.pose.x, record.pose.y, "y*", markersize=16, label="capture pose")
ax.legend(loc="lower right")
ax.set_aspect("equal")
ax.set_title("photo-taking behavior")
fig.tight_layout()
fig.savefig(OUT / "photo_behavior.png", dpi=120)
print(f"wrote {OUT / 'photo_behavior.png'}")
