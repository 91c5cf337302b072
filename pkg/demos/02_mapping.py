"""Occupancy mapping from a scripted tour of the boxes room.

The robot drives a rectangle around the central obstacle, spinning once
at each corner so the narrow scan cone sweeps the walls. Scans are
integrated at ground-truth poses; the resulting belief is thresholded
into occupied / free / unknown and saved in the PGM map format.

Run:  python demos/02_mapping.py
Writes demos/out/boxes_map.pgm (+ .meta) and demos/out/mapping.png
"""

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from navsim.mapping import Mapper, MapperConfig, occupancy_probability, save_map
from navsim.types import FREE, OCCUPIED, Twist
from navsim.world import ScanConfig, Simulator, load_scenario, scenario_path

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

world, start = load_scenario(scenario_path("boxes"))
sim = Simulator(world, start, scan_cfg=ScanConfig(beams=241, rate=5.0))
mapper = Mapper(MapperConfig(), center=start)
dt = 1.0 / 15.0
scans = 0


def run(cmd, duration):
    global scans
    sim.set_twist(cmd)
    for _ in range(int(round(duration / dt))):
        result = sim.step(dt)
        if result.scan is not None:
            mapper.integrate_scan(sim.pose, result.scan)
            scans += 1


def face(theta):
    err = math.remainder(theta - sim.pose.theta, 2 * math.pi)
    if abs(err) > 1e-3:
        run(Twist(0.0, math.copysign(1.0, err)), abs(err))


def goto(x, y):
    dx, dy = x - sim.pose.x, y - sim.pose.y
    face(math.atan2(dy, dx))
    run(Twist(0.175, 0.0), math.hypot(dx, dy) / 0.175)


for corner in [(1.8, 1.4), (6.2, 1.4), (6.2, 4.6), (1.8, 4.6), (1.8, 3.0)]:
    goto(*corner)
    run(Twist(0.0, 1.0), 2 * math.pi)  # look around

tri = mapper.to_tristate()
print(f"integrated {scans} scans")
print(f"map: {tri.width}x{tri.height} cells at {tri.resolution} m")
print(f"occupied: {(tri.cells == OCCUPIED).sum()}, free: {(tri.cells == FREE).sum()}")

save_map(tri, OUT / "boxes_map.pgm")
print(f"wrote {OUT / 'boxes_map.pgm'} (+ sidecar .meta)")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 5))
p = occupancy_probability(mapper.grid.log_odds)
ax1.imshow(p, origin="lower", cmap="gray_r", vmin=0, vmax=1)
ax1.set_title("occupancy probability")
ax2.imshow(tri.cells, origin="lower", cmap="gray", vmin=0, vmax=254)
ax2.set_title("tri-state map (dark = occupied)")
for ax in (ax1, ax2):
    ax.set_xticks([])
    ax.set_yticks([])
fig.tight_layout()
fig.savefig(OUT / "mapping.png", dpi=120)
print(f"wrote {OUT / 'mapping.png'}")
