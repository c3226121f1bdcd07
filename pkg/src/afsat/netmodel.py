"""Packets, FIFO tail-drop queues, and point-to-point links.

A link owns a queue and a single transmitter. Serialization time is
``size * 8 / bandwidth`` rounded to the integer-microsecond clock; the
receiver sees the packet one propagation delay after serialization ends.
Departures are strictly FIFO and separated by at least one serialization
time, so delivered throughput can never exceed the line rate.
"""

from __future__ import annotations

from collections import deque

from .config import GREEN
from .simcore import US_PER_S, Simulator

TCP_DATA, TCP_ACK, UDP = "tcp-data", "tcp-ack", "udp"


class Packet:
    __slots__ = ("uid", "customer_id", "flow_id", "kind", "size_bytes",
                 "color", "seq", "created_at_us")

    def __init__(self, uid: int, customer_id: int, flow_id: int, kind: str,
                 size_bytes: int, seq: int, created_at_us: int,
                 color: str = GREEN):
        self.uid = uid
        self.customer_id = customer_id
        self.flow_id = flow_id
        self.kind = kind
        self.size_bytes = size_bytes
        self.color = color
        self.seq = seq
        self.created_at_us = created_at_us

    def __repr__(self) -> str:  # debugging aid only
        return (f"Packet(#{self.uid} c{self.customer_id}/f{self.flow_id} "
                f"{self.kind} seq={self.seq} {self.color})")


class DropTailQueue:
    """Bounded FIFO; arrivals beyond the limit are dropped."""

    __slots__ = ("limit", "_queue", "drops", "arrivals")

    def __init__(self, limit: int):
        self.limit = limit
        self._queue: deque = deque()
        self.drops = 0
        self.arrivals = 0

    def __len__(self) -> int:
        return len(self._queue)

    def offer(self, pkt: Packet, now_us: int) -> bool:
        self.arrivals += 1
        if len(self._queue) >= self.limit:
            self.drops += 1
            return False
        self._queue.append(pkt)
        return True

    def pop(self) -> Packet:
        return self._queue.popleft()

    def dropped_total(self) -> int:
        return self.drops


def serialization_us(size_bytes: int, bandwidth_bps: int) -> int:
    """Transmission time in integer microseconds, rounded half up."""
    num = size_bytes * 8 * US_PER_S
    return (2 * num + bandwidth_bps) // (2 * bandwidth_bps)


class Link:
    """Unidirectional link: queue + transmitter + fixed propagation delay.

    `dst` is any object with ``receive(pkt, link)``. Conservation counters
    satisfy offered == delivered + dropped + queued + in_flight at any
    event boundary.
    """

    __slots__ = ("sim", "name", "bandwidth_bps", "delay_us", "queue", "dst",
                 "busy_until_us", "offered", "delivered", "in_flight",
                 "_wakeup_pending", "_ser_cache")

    def __init__(self, sim: Simulator, name: str, bandwidth_bps: int,
                 delay_us: int, queue, dst):
        self.sim = sim
        self.name = name
        self.bandwidth_bps = bandwidth_bps
        self.delay_us = delay_us
        self.queue = queue
        self.dst = dst
        self.busy_until_us = 0
        self.offered = 0
        self.delivered = 0
        self.in_flight = 0
        self._wakeup_pending = False
        self._ser_cache: dict[int, int] = {}

    def serialization_us(self, size_bytes: int) -> int:
        cached = self._ser_cache.get(size_bytes)
        if cached is None:
            cached = serialization_us(size_bytes, self.bandwidth_bps)
            self._ser_cache[size_bytes] = cached
        return cached

    def send(self, pkt: Packet) -> bool:
        """Offer a packet to this link; False means the queue dropped it."""
        sim = self.sim
        now = sim.now_us
        self.offered += 1
        if not self.queue.offer(pkt, now):
            return False
        if self._wakeup_pending:
            return True
        if now >= self.busy_until_us:
            self._transmit_head(None)
        else:
            self._wakeup_pending = True
            sim.schedule(self.busy_until_us, self._transmit_head)
        return True

    def _transmit_head(self, _arg) -> None:
        # transmitter is idle here; start the head-of-line packet
        self._wakeup_pending = False
        queue = self.queue
        pkt = queue.pop()
        sim = self.sim
        done = sim.now_us + self.serialization_us(pkt.size_bytes)
        self.busy_until_us = done
        self.in_flight += 1
        sim.schedule(done + self.delay_us, self._deliver, pkt)
        if len(queue):
            self._wakeup_pending = True
            sim.schedule(done, self._transmit_head)

    def _deliver(self, pkt: Packet) -> None:
        self.in_flight -= 1
        self.delivered += 1
        self.dst.receive(pkt, self)

    def conservation_ok(self) -> bool:
        return (self.offered == self.delivered + self.queue.dropped_total()
                + len(self.queue) + self.in_flight)
