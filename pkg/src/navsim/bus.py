"""In-process topic bus.

Replaces a networked middleware with typed named topics and bounded
per-subscriber queues. Time is a logical simulation clock advanced by
whoever drives the loop, never the wall clock, so runs replay bit-for-bit.
"""

from __future__ import annotations

import threading
from collections import deque


class BusError(Exception):
    pass


class Subscription:
    def __init__(self, topic: str, maxlen: int):
        self.topic = topic
        self._queue: deque = deque(maxlen=maxlen)

    def _push(self, msg) -> None:
        # deque(maxlen) drops the oldest message on overflow
        self._queue.append(msg)

    def poll(self):
        """Return the next message, or None if the queue is empty."""
        if self._queue:
            return self._queue.popleft()
        return None

    def drain(self) -> list:
        out = list(self._queue)
        self._queue.clear()
        return out

    def latest(self):
        """Drop everything but the newest message and return it (or None)."""
        msg = None
        while self._queue:
            msg = self._queue.popleft()
        return msg

    def __len__(self) -> int:
        return len(self._queue)


class TopicBus:
    """Named, typed topics with FIFO delivery to every subscriber."""

    def __init__(self):
        self._types: dict[str, type] = {}
        self._subs: dict[str, list[Subscription]] = {}
        self._lock = threading.Lock()
        self._clock = 0.0

    # -- clock ------------------------------------------------------------

    @property
    def now(self) -> float:
        return self._clock

    def advance(self, dt: float) -> float:
        if dt < 0:
            raise BusError("clock cannot run backwards")
        with self._lock:
            self._clock += dt
            return self._clock

    # -- topics -----------------------------------------------------------

    def register(self, topic: str, msg_type: type) -> None:
        with self._lock:
            existing = self._types.get(topic)
            if existing is not None and existing is not msg_type:
                raise BusError(f"topic {topic!r} already registered with {existing.__name__}")
            self._types[topic] = msg_type
            self._subs.setdefault(topic, [])

    def publish(self, topic: str, msg) -> None:
        with self._lock:
            if topic not in self._types:
                raise BusError(f"publish to unregistered topic {topic!r}")
            expected = self._types[topic]
            if not isinstance(msg, expected):
                raise BusError(
                    f"topic {topic!r} carries {expected.__name__}, got {type(msg).__name__}"
                )
            for sub in self._subs[topic]:
                sub._push(msg)

    def subscribe(self, topic: str, maxlen: int = 256) -> Subscription:
        with self._lock:
            if topic not in self._types:
                raise BusError(f"subscribe to unregistered topic {topic!r}")
            sub = Subscription(topic, maxlen)
            self._subs[topic].append(sub)
            return sub

    def topics(self) -> list[str]:
        with self._lock:
            return sorted(self._types)
