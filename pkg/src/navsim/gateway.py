"""JSON-over-websocket gateway for the operator console.

One JSON object per websocket message, shaped {"topic": ..., "data": ...};
the schemas live in PROTOCOL.md. The gateway owns the operator-safety
dead-man switch: while teleoperation is active, missing heartbeats (or a
disconnect) force a stop command onto the key topic, because a browser
cannot guarantee a final message on tab close.

GatewayCore is transport-free and drives all protocol and dead-man logic
against the stack's logical clock; serve() wraps it in a websocket server
that paces the simulation against the wall clock.
"""

from __future__ import annotations

import asyncio
import base64
import json
import logging
import math
import time

from .navigator import NavStatus
from .runner import Stack
from .local_planner import NavGoal
from .types import Pose2D, wrap_angle

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
HEARTBEAT_INTERVAL = 1.0  # seconds without key/heartbeat before the dead-man stop

MAP_PERIOD = 1.0
SCAN_PERIOD = 0.5
POSE_PERIOD = 1.0 / 15.0
SCAN_STRIDE = 4  # send every 4th beam


class GatewayError(ValueError):
    pass


def _pose_dict(pose: Pose2D) -> dict:
    return {"x": pose.x, "y": pose.y, "theta": pose.theta}


class GatewayCore:
    """Protocol logic without sockets: feed inbound dicts, collect outbound."""

    def __init__(self, stack: Stack, heartbeat_interval: float = HEARTBEAT_INTERVAL):
        self.stack = stack
        self.heartbeat_interval = heartbeat_interval
        self._odom = stack.bus.subscribe("/odom", maxlen=4)
        self._scan = stack.bus.subscribe("/scan", maxlen=2)
        self._status = stack.bus.subscribe("/nav_status", maxlen=16)
        self._photos = stack.bus.subscribe("/photo_event", maxlen=16)
        self._teleop_active = False
        self._last_heartbeat = stack.bus.now
        self._next_map = -math.inf
        self._next_scan = -math.inf
        self._next_pose = -math.inf
        self._map_version_sent = -1
        self._plan_sent = None

    # -- inbound ---------------------------------------------------------

    def handle_message(self, obj) -> None:
        if not isinstance(obj, dict) or "topic" not in obj:
            raise GatewayError("message must be an object with a 'topic' field")
        topic = obj["topic"]
        data = obj.get("data") or {}
        if topic == "goal":
            try:
                goal = NavGoal(
                    Pose2D(float(data["x"]), float(data["y"]), wrap_angle(float(data["theta"]))),
                    float(data.get("xy_tolerance", self.stack.params.xy_goal_tolerance)),
                    float(data.get("yaw_tolerance", self.stack.params.yaw_goal_tolerance)),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise GatewayError(f"bad goal message: {exc}") from exc
            self.stack.bus.publish("/goal", goal)
        elif topic == "key":
            key = data.get("key")
            if not isinstance(key, str) or len(key) != 1:
                raise GatewayError("key message needs a single-character 'key'")
            self.stack.bus.publish("/keys", key)
            self._last_heartbeat = self.stack.bus.now
            self._teleop_active = key != "s"
        elif topic == "heartbeat":
            self._last_heartbeat = self.stack.bus.now
        else:
            raise GatewayError(f"unknown inbound topic {topic!r}")

    def client_disconnected(self) -> None:
        if self._teleop_active:
            self._stop()

    def _stop(self) -> None:
        self.stack.bus.publish("/keys", "s")
        self._teleop_active = False

    # -- outbound ----------------------------------------------------------

    def hello(self) -> dict:
        return {
            "topic": "hello",
            "data": {
                "protocol": PROTOCOL_VERSION,
                "heartbeat_interval": self.heartbeat_interval,
                "control_period": self.stack.dt,
            },
        }

    def _map_message(self) -> dict:
        tri = self.stack.tristate()
        return {
            "topic": "map",
            "data": {
                "resolution": tri.resolution,
                "origin": _pose_dict(tri.origin),
                "width": tri.width,
                "height": tri.height,
                "encoding": "tristate-base64",
                "cells": base64.b64encode(tri.cells.tobytes()).decode("ascii"),
            },
        }

    def _status_message(self, status: NavStatus) -> dict:
        return {
            "topic": "nav_status",
            "data": {
                "state": status.state.value,
                "reason": status.reason,
                "goal": _pose_dict(status.goal.target) if status.goal else None,
                "goal_id": status.goal_id,
            },
        }

    def snapshot_messages(self) -> list[dict]:
        """Initial state for a client that just connected."""
        out = [self._map_message(), self._pose_message(), self._status_message(self.stack.navigator.status())]
        return out

    def _pose_message(self) -> dict:
        state = self.stack.odom.state
        return {
            "topic": "pose",
            "data": {
                "x": state.pose.x,
                "y": state.pose.y,
                "theta": state.pose.theta,
                "v": state.v_s,
                "omega": state.omega,
                "stamp": state.stamp,
            },
        }

    def tick(self) -> list[dict]:
        """Dead-man check plus outbound telemetry; call once per stack step."""
        now = self.stack.bus.now
        if self._teleop_active and now - self._last_heartbeat > self.heartbeat_interval:
            self._stop()
        out: list[dict] = []
        if self._odom.latest() is not None and now >= self._next_pose:
            out.append(self._pose_message())
            self._next_pose = now + POSE_PERIOD
        scan = self._scan.latest()
        if scan is not None and now >= self._next_scan:
            ranges = [
                (None if math.isinf(r) else round(float(r), 4))
                for r in scan.ranges[::SCAN_STRIDE]
            ]
            pose = self.stack.pose
            out.append(
                {
                    "topic": "scan",
                    "data": {
                        "angle_min": scan.angle_min,
                        "angle_increment": scan.angle_increment * SCAN_STRIDE,
                        "range_min": scan.range_min,
                        "range_max": scan.range_max,
                        "ranges": ranges,
                        "stamp": scan.stamp,
                        "pose": _pose_dict(pose),
                    },
                }
            )
            self._next_scan = now + SCAN_PERIOD
        if now >= self._next_map and self.stack._map_version != self._map_version_sent:
            out.append(self._map_message())
            self._map_version_sent = self.stack._map_version
            self._next_map = now + MAP_PERIOD
        for status in self._status.drain():
            out.append(self._status_message(status))
        plan = self.stack.navigator.plan
        if plan is not self._plan_sent:
            poses = [] if plan is None else [{"x": p.x, "y": p.y} for p in plan.poses[:: max(1, len(plan.poses) // 200)]]
            out.append({"topic": "path", "data": {"poses": poses}})
            self._plan_sent = plan
        for record in self._photos.drain():
            out.append(
                {
                    "topic": "photo_event",
                    "data": {
                        "person_id": record.person_id,
                        "pose": _pose_dict(record.pose),
                        "stamp": record.stamp,
                        "snapshot": record.snapshot,
                    },
                }
            )
        return out


def serve(stack: Stack, host: str = "127.0.0.1", port: int = 8765) -> None:
    """Run the realtime gateway until interrupted."""
    asyncio.run(_serve_async(stack, host, port))


async def _serve_async(stack: Stack, host: str, port: int) -> None:
    from websockets.asyncio.server import broadcast, serve as ws_serve

    core = GatewayCore(stack)
    clients: set = set()

    async def handler(ws):
        clients.add(ws)
        log.info("console connected (%d clients)", len(clients))
        try:
            await ws.send(json.dumps(core.hello()))
            for msg in core.snapshot_messages():
                await ws.send(json.dumps(msg))
            async for raw in ws:
                try:
                    core.handle_message(json.loads(raw))
                except (GatewayError, json.JSONDecodeError) as exc:
                    await ws.send(json.dumps({"topic": "error", "data": {"message": str(exc)}}))
        finally:
            clients.discard(ws)
            core.client_disconnected()
            log.info("console disconnected (%d clients)", len(clients))

    async def sim_loop():
        next_t = time.monotonic()
        while True:
            stack.step()
            for msg in core.tick():
                if clients:
                    broadcast(clients, json.dumps(msg))
            next_t += stack.dt
            await asyncio.sleep(max(0.0, next_t - time.monotonic()))

    async with ws_serve(handler, host, port):
        log.info("gateway listening on ws://%s:%d", host, port)
        await sim_loop()
