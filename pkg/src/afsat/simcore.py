"""Deterministic discrete-event engine.

Time is kept as integer microseconds so that event ordering never depends
on floating-point rounding. Components draw randomness from named streams
derived from the master seed, so adding a component does not shift the
draws seen by existing ones.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass
from typing import Any, Callable

US_PER_S = 1_000_000


def s_to_us(seconds: float) -> int:
    """Convert seconds to the engine's integer-microsecond clock."""
    return round(seconds * US_PER_S)


def us_to_s(us: int) -> float:
    return us / US_PER_S


def stream_seed(master_seed: int, stream_id: str) -> int:
    """64-bit seed for a named stream, stable across platforms."""
    digest = hashlib.sha256(f"{master_seed}/{stream_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def rng_stream(master_seed: int, stream_id: str) -> random.Random:
    """Independent RNG for one component. Same (seed, id) -> same draws."""
    return random.Random(stream_seed(master_seed, stream_id))


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current clock."""


class SimulationError(RuntimeError):
    """A handler raised during dispatch; carries the failing clock time."""


@dataclass(frozen=True)
class RunSummary:
    events_dispatched: int
    final_clock_us: int


class Simulator:
    """Event queue with a virtual clock and per-component RNG streams.

    Events with equal fire time dispatch in scheduling order. Handles
    returned by :meth:`schedule` can be cancelled until they fire.
    """

    __slots__ = ("now_us", "master_seed", "_heap", "_seq", "_pending",
                 "_cancelled", "events_dispatched")

    def __init__(self, master_seed: int = 0):
        self.now_us = 0
        self.master_seed = master_seed
        self._heap: list[tuple[int, int, Callable[[Any], None], Any]] = []
        self._seq = 0
        self._pending: set[int] = set()
        self._cancelled: set[int] = set()
        self.events_dispatched = 0

    def rng(self, stream_id: str) -> random.Random:
        return rng_stream(self.master_seed, stream_id)

    def schedule(self, fire_time_us: int, action: Callable[[Any], None],
                 arg: Any = None) -> int:
        """Schedule `action(arg)` at `fire_time_us`; returns a cancel handle."""
        if fire_time_us < self.now_us:
            raise SchedulingError(
                f"cannot schedule at {fire_time_us} us; clock is {self.now_us} us")
        self._seq += 1
        seq = self._seq
        heapq.heappush(self._heap, (fire_time_us, seq, action, arg))
        self._pending.add(seq)
        return seq

    def schedule_in(self, delay_us: int, action: Callable[[Any], None],
                    arg: Any = None) -> int:
        return self.schedule(self.now_us + delay_us, action, arg)

    def cancel(self, handle: int) -> bool:
        """True if the event was pending and is now inert."""
        if handle in self._pending:
            self._pending.discard(handle)
            self._cancelled.add(handle)
            return True
        return False

    def run(self, until_us: int) -> RunSummary:
        """Dispatch every event with fire time <= `until_us` in (time, seq) order."""
        heap = self._heap
        pending = self._pending
        cancelled = self._cancelled
        pop = heapq.heappop
        dispatched = self.events_dispatched
        try:
            while heap and heap[0][0] <= until_us:
                t, seq, action, arg = pop(heap)
                if cancelled:
                    if seq in cancelled:
                        cancelled.discard(seq)
                        continue
                pending.discard(seq)
                self.now_us = t
                dispatched += 1
                action(arg)
        except Exception as exc:
            self.events_dispatched = dispatched
            raise SimulationError(
                f"handler {getattr(action, '__qualname__', action)!r} failed "
                f"at t={self.now_us} us") from exc
        self.events_dispatched = dispatched
        self.now_us = until_us
        return RunSummary(events_dispatched=dispatched, final_clock_us=until_us)
