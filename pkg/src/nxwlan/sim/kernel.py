"""Discrete-event kernel with an integer-microsecond clock.

Events run in (time, insertion order) order, so two runs that schedule
the same events in the same order execute identically.
"""

from __future__ import annotations

import heapq
from typing import Callable


class Kernel:
    def __init__(self):
        self.now = 0
        self._queue = []
        self._seq = 0
        self.executed = 0

    def at(self, time_us: int, fn: Callable, *args) -> None:
        if not isinstance(time_us, int):
            raise TypeError("event times are integer microseconds")
        if time_us < self.now:
            raise ValueError(f"cannot schedule at {time_us} us, clock is at {self.now} us")
        heapq.heappush(self._queue, (time_us, self._seq, fn, args))
        self._seq += 1

    def after(self, delay_us: int, fn: Callable, *args) -> None:
        self.at(self.now + delay_us, fn, *args)

    def run(self, until_us: int | None = None) -> None:
        q = self._queue
        while q and (until_us is None or q[0][0] <= until_us):
            time_us, _, fn, args = heapq.heappop(q)
            self.now = time_us
            self.executed += 1
            fn(*args)
        if until_us is not None and until_us > self.now:
            self.now = until_us

    def __len__(self) -> int:
        return len(self._queue)
