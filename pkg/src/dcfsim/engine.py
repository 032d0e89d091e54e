"""Deterministic discrete-event core: integer-ns clock, ordered queue, run loop.

All simulation time is integer nanoseconds.  Slot (9 us), SIFS (16 us) and
every frame duration are exact integer multiples, so a 100 s horizon never
accumulates floating-point drift.  Events with equal timestamps dispatch in
insertion order; the queue never arbitrates collisions, the PHY does.
"""

import heapq
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, List, Optional


class SchedulingError(RuntimeError):
    """Scheduling an event in the past is a programming error; the run aborts."""


class EventKind(Enum):
    BACKOFF_EXPIRY = "backoff_expiry"
    TX_PHASE_END = "tx_phase_end"
    INTERVAL_BOUNDARY = "interval_boundary"


@dataclass
class Event:
    time: int                      # ns since simulation start
    sequence: int                  # tie-break counter, FIFO among equal times
    kind: EventKind
    device: Optional[int] = None   # bss_id of the device the event targets
    payload: Any = None


class EventHandle:
    """Returned by schedule(); allows cancelling a pending event.

    Cancellation is lazy: the event stays queued but is skipped on pop.
    A busy channel freezing a pending backoff expiry is the main user.
    """

    __slots__ = ("event", "cancelled")

    def __init__(self, event: Event):
        self.event = event
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class Simulator:
    """Monotonic clock plus a (time, sequence)-ordered event queue."""

    def __init__(self) -> None:
        self.now: int = 0
        self._queue: List[tuple] = []
        self._sequence = 0

    def __len__(self) -> int:
        return len(self._queue)

    def schedule(self, time: int, kind: EventKind, device: Optional[int] = None,
                 payload: Any = None) -> EventHandle:
        if time < self.now:
            raise SchedulingError(
                f"event {kind.value} for device {device} scheduled at {time} ns "
                f"but clock is already at {self.now} ns")
        self._sequence += 1
        event = Event(time, self._sequence, kind, device, payload)
        handle = EventHandle(event)
        heapq.heappush(self._queue, (time, self._sequence, handle))
        return handle

    def run(self, until: int, dispatch: Callable[[Event], None]) -> int:
        """Dispatch events in (time, sequence) order.

        Stops when the queue is empty or the next event lies beyond `until`
        (that event stays queued, undispatched).  Returns the final clock,
        i.e. the time of the last dispatched event (0 if none was).
        """
        while self._queue:
            time, _, handle = self._queue[0]
            if time > until:
                break
            heapq.heappop(self._queue)
            if handle.cancelled:
                continue
            assert time >= self.now, "event queue violated clock monotonicity"
            self.now = time
            dispatch(handle.event)
        return self.now
