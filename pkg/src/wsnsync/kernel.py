"""Discrete-event scheduler with integer-nanosecond time and seeded randomness.

Simulation time is a plain int count of nanoseconds since simulation start
(ground truth, never a node's clock reading). Events that share a fire time
dispatch in insertion order, so a fixed seed and scenario reproduce the exact
same dispatch sequence run after run.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

TrueTime = int  # nanoseconds since simulation start
EventId = int

# The one PRNG used for the whole repo: CPython's Mersenne Twister.
RNG_ALGORITHM = "mt19937"


class PastEventError(ValueError):
    """Scheduling an event before the current simulation time.

    Always a protocol-logic bug, never a recoverable condition.
    """


@dataclass(frozen=True)
class RngState:
    """Seed plus algorithm identifier; same seed + same config = same trace."""

    seed: int
    algorithm: str = RNG_ALGORITHM


@dataclass
class Event:
    fire_at: TrueTime
    target: str  # node name, or a harness label like "sampler"
    action: Callable[[], None]
    sequence_number: int = field(default=-1)  # assigned by the scheduler


class Scheduler:
    """Single-threaded event loop owned by exactly one simulation run."""

    def __init__(self, seed: int = 0):
        self.rng_state = RngState(seed)
        self.rng = random.Random(seed)
        self.now: TrueTime = 0
        self._heap: List[Tuple[TrueTime, EventId]] = []
        self._events: dict[EventId, Event] = {}
        self._next_id: EventId = 0
        self.scheduled_count = 0
        self.dispatched_count = 0
        self.cancelled_count = 0
        # (fire_at, event_id, target) per dispatch; enable for determinism checks
        self.trace: Optional[List[Tuple[TrueTime, EventId, str]]] = None

    def enable_trace(self) -> None:
        self.trace = []

    @property
    def pending_count(self) -> int:
        return len(self._events)

    def schedule(self, event: Event) -> EventId:
        if event.fire_at < self.now:
            raise PastEventError(
                f"event for {event.target!r} at {event.fire_at} ns is before now={self.now} ns"
            )
        event_id = self._next_id
        self._next_id += 1
        event.sequence_number = event_id
        self._events[event_id] = event
        heapq.heappush(self._heap, (event.fire_at, event_id))
        self.scheduled_count += 1
        return event_id

    def schedule_at(self, fire_at: TrueTime, target: str, action: Callable[[], None]) -> EventId:
        return self.schedule(Event(fire_at, target, action))

    def cancel(self, event_id: EventId) -> bool:
        if event_id in self._events:
            del self._events[event_id]  # lazily skipped when popped
            self.cancelled_count += 1
            return True
        return False

    def run_until(self, t_end: TrueTime) -> int:
        if t_end < self.now:
            raise PastEventError(f"run_until({t_end}) is before now={self.now}")
        dispatched = 0
        while self._heap and self._heap[0][0] <= t_end:
            fire_at, event_id = heapq.heappop(self._heap)
            event = self._events.pop(event_id, None)
            if event is None:
                continue  # cancelled
            self.now = fire_at
            if self.trace is not None:
                self.trace.append((fire_at, event_id, event.target))
            event.action()
            dispatched += 1
        self.now = t_end
        self.dispatched_count += dispatched
        return dispatched
