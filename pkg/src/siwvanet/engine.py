"""Discrete-event kernel with deterministic (time, insertion order) dispatch."""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

GLOBAL = -1  # target for events not bound to a node


@dataclass(order=True)
class Event:
    time: float
    seq: int
    target: int = field(default=GLOBAL, compare=False)
    kind: str = field(default="", compare=False)
    payload: Any = field(default=None, compare=False)
    action: Optional[Callable[..., Any]] = field(default=None, compare=False, repr=False)
    cancelled: bool = field(default=False, compare=False, repr=False)
    dispatched: bool = field(default=False, compare=False, repr=False)


class Scheduler:
    """Priority queue of events ordered by (time, seq).

    ``action`` is called with the event's payload (if not None) when the
    event is dispatched. Events without an action are handed to ``on_event``.
    """

    def __init__(self, seed: int = 0, on_event: Optional[Callable[[Event], Any]] = None):
        self.clock = 0.0
        self.seed = seed
        self.on_event = on_event
        self._queue: list[Event] = []
        self._counter = itertools.count()
        self._pending = 0
        self._streams: dict[str, random.Random] = {}
        self.dispatched = 0

    def rng(self, stream: str) -> random.Random:
        """Independent generator for one module, derived from the master seed."""
        if stream not in self._streams:
            self._streams[stream] = random.Random(f"{self.seed}/{stream}")
        return self._streams[stream]

    @property
    def pending(self) -> int:
        return self._pending

    def schedule(self, ev: Event) -> Event:
        if ev.time < self.clock:
            raise ValueError(f"cannot schedule at t={ev.time} before clock {self.clock}")
        ev.seq = next(self._counter)
        heapq.heappush(self._queue, ev)
        self._pending += 1
        return ev

    def at(self, time: float, action: Callable, payload: Any = None, *, target: int = GLOBAL, kind: str = "") -> Event:
        return self.schedule(Event(time, 0, target, kind, payload, action))

    def after(self, delay: float, action: Callable, payload: Any = None, *, target: int = GLOBAL, kind: str = "") -> Event:
        return self.at(self.clock + delay, action, payload, target=target, kind=kind)

    def cancel(self, handle: Optional[Event]) -> bool:
        if handle is None or handle.cancelled or handle.dispatched:
            return False
        handle.cancelled = True
        self._pending -= 1
        return True

    def run_until(self, t_end: float) -> int:
        if t_end < self.clock:
            raise ValueError(f"t_end {t_end} is before clock {self.clock}")
        count = 0
        queue = self._queue
        while queue and queue[0].time <= t_end:
            ev = heapq.heappop(queue)
            if ev.cancelled:
                continue
            self.clock = ev.time
            ev.dispatched = True
            self._pending -= 1
            count += 1
            if ev.action is not None:
                if ev.payload is None:
                    ev.action()
                else:
                    ev.action(ev.payload)
            elif self.on_event is not None:
                self.on_event(ev)
        self.clock = t_end
        self.dispatched += count
        return count
