"""Planar frame transforms and the frame tree.

Transforms are rigid 2D motions plus an additive z offset, enough to
express the fixed sensor layout (camera mounted 1.0 m above the base
center) while keeping all navigation math planar. The tree is rooted at
the odometry frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .types import wrap_angle

ROOT_FRAME = "odom"


class TransformError(Exception):
    pass


@dataclass(frozen=True)
class Transform:
    parent: str
    child: str
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    yaw: float = 0.0

    def apply(self, px: float, py: float) -> tuple[float, float]:
        """Map a point from the child frame into the parent frame."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return self.x + c * px - s * py, self.y + s * px + c * py


def compose(a: Transform, b: Transform) -> Transform:
    """Chain a(parent->mid) with b(mid->child); z offsets add."""
    if a.child != b.parent:
        raise TransformError(f"cannot compose {a.parent}->{a.child} with {b.parent}->{b.child}")
    x, y = a.apply(b.x, b.y)
    return Transform(a.parent, b.child, x, y, a.z + b.z, wrap_angle(a.yaw + b.yaw))


def invert(t: Transform) -> Transform:
    c, s = math.cos(t.yaw), math.sin(t.yaw)
    return Transform(
        t.child,
        t.parent,
        -(c * t.x + s * t.y),
        -(-s * t.x + c * t.y),
        -t.z,
        wrap_angle(-t.yaw),
    )


def identity(frame: str) -> Transform:
    return Transform(frame, frame)


class TransformTree:
    """Set of frames connected by transforms, one parent per frame."""

    def __init__(self):
        self._edge_to: dict[str, Transform] = {}  # child -> edge from its parent
        self._frames: set[str] = set()

    def add(self, t: Transform) -> None:
        if t.parent == t.child:
            raise TransformError("a frame cannot be its own parent")
        if t.child in self._edge_to:
            raise TransformError(f"frame {t.child!r} already has a parent")
        self._edge_to[t.child] = t
        self._frames.add(t.parent)
        self._frames.add(t.child)
        if self._has_cycle(t.child):
            del self._edge_to[t.child]
            raise TransformError(f"adding {t.parent}->{t.child} would create a cycle")

    def _has_cycle(self, start: str) -> bool:
        seen = {start}
        frame = start
        while frame in self._edge_to:
            frame = self._edge_to[frame].parent
            if frame in seen:
                return True
            seen.add(frame)
        return False

    def _chain_to_root(self, frame: str) -> list[Transform]:
        """Edges from the frame's root down to the frame."""
        chain = []
        while frame in self._edge_to:
            edge = self._edge_to[frame]
            chain.append(edge)
            frame = edge.parent
        chain.reverse()
        return chain

    def _root_of(self, frame: str) -> str:
        while frame in self._edge_to:
            frame = self._edge_to[frame].parent
        return frame

    def lookup(self, parent: str, child: str) -> Transform:
        """Transform mapping points in `child` into `parent` coordinates."""
        for frame in (parent, child):
            if frame not in self._frames:
                raise TransformError(f"unknown frame {frame!r}")
        if parent == child:
            return identity(parent)
        if self._root_of(parent) != self._root_of(child):
            raise TransformError(f"frames {parent!r} and {child!r} are not connected")
        root = self._root_of(parent)
        root_to_parent = identity(root)
        for edge in self._chain_to_root(parent):
            root_to_parent = compose(root_to_parent, edge)
        root_to_child = identity(root)
        for edge in self._chain_to_root(child):
            root_to_child = compose(root_to_child, edge)
        out = compose(invert(root_to_parent), root_to_child)
        return Transform(parent, child, out.x, out.y, out.z, out.yaw)


def default_robot_tree(camera_height: float = 1.0) -> TransformTree:
    """odom -> base_link -> camera_link, camera mounted above the base center."""
    tree = TransformTree()
    tree.add(Transform(ROOT_FRAME, "base_link", 0.0, 0.0, 0.0, 0.0))
    tree.add(Transform("base_link", "camera_link", 0.0, 0.0, camera_height, 0.0))
    return tree
