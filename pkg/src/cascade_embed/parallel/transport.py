"""Message transports between workers.

The engine only needs ``connect``, ``send`` and ``recv``; an MPI or socket
backend can replace :class:`ChannelTransport` without touching the engine.
"""

from __future__ import annotations

import queue
import threading
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..errors import TransportError

NODE_PARAM = "node-param"
CASCADE_PARAM = "cascade-param"


@dataclass(frozen=True, eq=False)
class ParamMessage:
    kind: str
    entity_id: int
    iteration: int
    payload: np.ndarray
    sender: int = -1


class Transport:
    def connect(self, n_workers: int) -> None:
        raise NotImplementedError

    def send(self, src: int, dst: int, msg: ParamMessage) -> None:
        """Post a message without waiting for delivery."""
        raise NotImplementedError

    def recv(self, dst: int, timeout: float) -> ParamMessage:
        """Block until a message for ``dst`` arrives; TransportError on timeout."""
        raise NotImplementedError


class ChannelTransport(Transport):
    """In-process transport: one unbounded FIFO inbox per worker."""

    def connect(self, n_workers: int) -> None:
        self.inboxes = [queue.SimpleQueue() for _ in range(n_workers)]

    def send(self, src, dst, msg):
        self.inboxes[dst].put(msg)

    def recv(self, dst, timeout):
        try:
            return self.inboxes[dst].get(timeout=timeout)
        except queue.Empty:
            raise TransportError(f"worker {dst}: no message within {timeout}s") from None


class InstrumentedTransport(ChannelTransport):
    """Channel transport that logs every message put on the wire."""

    def connect(self, n_workers):
        super().connect(n_workers)
        self._lock = threading.Lock()
        self.log = []  # (iteration, kind, src, dst, entity_id)

    def send(self, src, dst, msg):
        with self._lock:
            self.log.append((msg.iteration, msg.kind, src, dst, msg.entity_id))
        super().send(src, dst, msg)

    def counts(self) -> Counter:
        """Messages per ``(iteration, kind, src)``."""
        return Counter((it, kind, src) for it, kind, src, _, _ in self.log)

    def duplicates(self) -> int:
        c = Counter(self.log)
        return sum(v - 1 for v in c.values() if v > 1)


class StalledTransport(ChannelTransport):
    """Holds every message until :meth:`release` is called."""

    def connect(self, n_workers):
        super().connect(n_workers)
        self._held = []
        self._lock = threading.Lock()
        self._open = False

    def send(self, src, dst, msg):
        with self._lock:
            if not self._open:
                self._held.append((src, dst, msg))
                return
        super().send(src, dst, msg)

    def release(self):
        with self._lock:
            self._open = True
            held, self._held = self._held, []
        for src, dst, msg in held:
            super().send(src, dst, msg)

    def stall(self):
        with self._lock:
            self._open = False
