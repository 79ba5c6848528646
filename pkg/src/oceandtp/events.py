"""Single-threaded discrete-event loop on a virtual nanosecond clock.

Events fire in (time, insertion order) — the insertion tiebreak is what makes
whole-simulation runs bit-reproducible.
"""

from __future__ import annotations

import heapq
from typing import Callable


class EventHandle:
    __slots__ = ("t_ns", "seq", "callback", "cancelled")

    def __init__(self, t_ns: int, seq: int, callback: Callable[[], None]):
        self.t_ns = t_ns
        self.seq = seq
        self.callback = callback
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True

    def __lt__(self, other: "EventHandle") -> bool:
        return (self.t_ns, self.seq) < (other.t_ns, other.seq)


class EventLoop:
    def __init__(self, start_ns: int = 0):
        self.now_ns = start_ns
        self._heap: list[EventHandle] = []
        self._next_seq = 0

    def schedule_at(self, t_ns: int, callback: Callable[[], None]) -> EventHandle:
        if t_ns < self.now_ns:
            raise ValueError(f"cannot schedule at {t_ns} ns, now is {self.now_ns} ns")
        handle = EventHandle(t_ns, self._next_seq, callback)
        self._next_seq += 1
        heapq.heappush(self._heap, handle)
        return handle

    def schedule_in(self, delay_ns: int, callback: Callable[[], None]) -> EventHandle:
        return self.schedule_at(self.now_ns + delay_ns, callback)

    def peek_time(self) -> int | None:
        """Time of the next pending event, skipping cancelled ones."""
        while self._heap and self._heap[0].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0].t_ns if self._heap else None

    def step(self) -> bool:
        """Run the next event; False when the queue is empty."""
        while self._heap:
            handle = heapq.heappop(self._heap)
            if handle.cancelled:
                continue
            self.now_ns = handle.t_ns
            handle.callback()
            return True
        return False

    def run_all(self, between: Callable[[], None] | None = None) -> None:
        """Drain the queue. `between` runs before every event (the operator
        injection point in interactive runs)."""
        while True:
            if between is not None:
                between()
            if not self.step():
                break

    def run_until(self, t_end_ns: int) -> None:
        """Run events with t <= t_end_ns, then advance the clock to t_end_ns."""
        while True:
            t = self.peek_time()
            if t is None or t > t_end_ns:
                break
            self.step()
        self.now_ns = max(self.now_ns, t_end_ns)
