"""TCP Reno senders, receivers, and the constant-bit-rate UDP source.

Sequence numbers count whole segments. Senders are greedy (always have
data), receivers acknowledge every segment immediately with a cumulative
ACK, and the advertised window is a fixed 64-segment cap.
"""

from __future__ import annotations

from typing import Callable

from .netmodel import Packet, TCP_ACK, TCP_DATA, UDP
from .simcore import Simulator, s_to_us

RTO_MIN_US = 1_000_000
RTO_INITIAL_US = 3_000_000
RTO_MAX_US = 64_000_000


class TcpRenoSender:
    """One Reno connection: slow start, congestion avoidance, fast
    retransmit/recovery, and timeout with exponential RTO backoff.

    Retransmission timing is lazy: a single scheduled check compares the
    clock against `timer_deadline_us` and re-arms itself if the deadline
    moved, so ACK processing never cancels engine events.
    """

    __slots__ = ("sim", "customer_id", "flow_id", "send_fn", "alloc_uid",
                 "segment_bytes", "max_window", "cwnd", "ssthresh",
                 "snd_una", "snd_nxt", "highest_sent", "dupacks",
                 "in_fast_recovery", "recover", "srtt_us", "rttvar_us",
                 "rto_us", "timer_deadline_us", "_timer_event_at",
                 "timed_seq", "timed_sent_us", "segments_sent",
                 "retransmits", "timeouts", "fast_retransmits")

    def __init__(self, sim: Simulator, customer_id: int, flow_id: int,
                 send_fn: Callable[[Packet], object],
                 alloc_uid: Callable[[], int],
                 segment_bytes: int = 576, max_window: int = 64):
        self.sim = sim
        self.customer_id = customer_id
        self.flow_id = flow_id
        self.send_fn = send_fn
        self.alloc_uid = alloc_uid
        self.segment_bytes = segment_bytes
        self.max_window = max_window
        self.cwnd = 1.0
        self.ssthresh = float(max_window)
        self.snd_una = 0
        self.snd_nxt = 0
        self.highest_sent = 0
        self.dupacks = 0
        self.in_fast_recovery = False
        self.recover = 0
        self.srtt_us: float | None = None
        self.rttvar_us = 0.0
        self.rto_us = RTO_INITIAL_US
        self.timer_deadline_us: int | None = None
        self._timer_event_at: int | None = None
        self.timed_seq: int | None = None
        self.timed_sent_us = 0
        self.segments_sent = 0
        self.retransmits = 0
        self.timeouts = 0
        self.fast_retransmits = 0

    # -- sending ---------------------------------------------------------

    def start(self, at_us: int) -> None:
        self.sim.schedule(at_us, self._on_start)

    def _on_start(self, _arg) -> None:
        self.fill_window()

    def effective_window(self) -> int:
        return min(int(self.cwnd), self.max_window)

    def fill_window(self) -> None:
        while self.snd_nxt - self.snd_una < self.effective_window():
            seq = self.snd_nxt
            # after go-back-N, seqs below highest_sent are resends (Karn)
            self._emit(seq, retransmit=seq < self.highest_sent)
            self.snd_nxt = seq + 1
            if seq >= self.highest_sent:
                self.highest_sent = seq + 1

    def _emit(self, seq: int, retransmit: bool) -> None:
        now = self.sim.now_us
        pkt = Packet(self.alloc_uid(), self.customer_id, self.flow_id,
                     TCP_DATA, self.segment_bytes, seq, now)
        self.segments_sent += 1
        if retransmit:
            self.retransmits += 1
            if self.timed_seq == seq:
                self.timed_seq = None      # Karn: never time a retransmit
        elif self.timed_seq is None:
            self.timed_seq = seq
            self.timed_sent_us = now
        if self.timer_deadline_us is None:
            self._arm_timer(now + self.rto_us)
        self.send_fn(pkt)

    # -- retransmission timer ---------------------------------------------

    def _arm_timer(self, deadline_us: int) -> None:
        self.timer_deadline_us = deadline_us
        if self._timer_event_at is None or self._timer_event_at > deadline_us:
            self._timer_event_at = deadline_us
            self.sim.schedule(deadline_us, self._on_timer)

    def _on_timer(self, _arg) -> None:
        self._timer_event_at = None
        deadline = self.timer_deadline_us
        if deadline is None:
            return
        now = self.sim.now_us
        if now < deadline:
            self._timer_event_at = deadline
            self.sim.schedule(deadline, self._on_timer)
            return
        self.on_timeout()

    def on_timeout(self) -> None:
        """RTO expiry: collapse to one segment and go back to slow start."""
        flight = self.snd_nxt - self.snd_una
        self.ssthresh = float(max(flight // 2, 2))
        self.cwnd = 1.0
        self.in_fast_recovery = False
        self.dupacks = 0
        self.timeouts += 1
        self.rto_us = min(self.rto_us * 2, RTO_MAX_US)
        self.timed_seq = None
        self.timer_deadline_us = None
        self.snd_nxt = self.snd_una + 1       # go-back-N from the hole
        self._emit(self.snd_una, retransmit=True)

    # -- receiving ---------------------------------------------------------

    def on_ack(self, ack_seq: int) -> None:
        """Cumulative ACK: `ack_seq` is the next segment the peer expects."""
        now = self.sim.now_us
        if ack_seq > self.snd_nxt:
            # pre-timeout copies still in flight were acknowledged
            self.snd_nxt = ack_seq
        if ack_seq > self.snd_una:
            if (self.timed_seq is not None and ack_seq > self.timed_seq):
                self._rtt_sample(now - self.timed_sent_us)
                self.timed_seq = None
            self.snd_una = ack_seq
            self.dupacks = 0
            if self.in_fast_recovery:
                self.in_fast_recovery = False
                self.cwnd = self.ssthresh
            elif self.cwnd < self.ssthresh:
                self.cwnd = min(self.cwnd + 1.0, float(self.max_window))
            else:
                self.cwnd = min(self.cwnd + 1.0 / self.cwnd,
                                float(self.max_window))
            if self.snd_una == self.snd_nxt:
                self.timer_deadline_us = None
            else:
                self._arm_timer(now + self.rto_us)
            self.fill_window()
        elif ack_seq == self.snd_una and self.snd_nxt > self.snd_una:
            self.dupacks += 1
            if self.in_fast_recovery:
                self.cwnd += 1.0              # inflate per extra duplicate
                self.fill_window()
            elif self.dupacks == 3:
                self._fast_retransmit()
        # acks below snd_una are stale and ignored

    def _fast_retransmit(self) -> None:
        flight = self.snd_nxt - self.snd_una
        self.ssthresh = float(max(flight // 2, 2))
        self.cwnd = self.ssthresh + 3.0
        self.in_fast_recovery = True
        self.recover = self.snd_nxt
        self.fast_retransmits += 1
        self._emit(self.snd_una, retransmit=True)
        self._arm_timer(self.sim.now_us + self.rto_us)
        self.fill_window()

    def _rtt_sample(self, sample_us: int) -> None:
        if self.srtt_us is None:
            self.srtt_us = float(sample_us)
            self.rttvar_us = sample_us / 2.0
        else:
            self.rttvar_us += 0.25 * (abs(self.srtt_us - sample_us) - self.rttvar_us)
            self.srtt_us += 0.125 * (sample_us - self.srtt_us)
        self.rto_us = max(RTO_MIN_US, round(self.srtt_us + 4.0 * self.rttvar_us))


class TcpReceiver:
    """Per-connection reassembly state; acks every arriving segment."""

    __slots__ = ("next_expected", "_out_of_order")

    def __init__(self):
        self.next_expected = 0
        self._out_of_order: set[int] = set()

    def on_data(self, seq: int) -> int:
        """Returns the cumulative ACK to emit for this arrival."""
        if seq == self.next_expected:
            nxt = seq + 1
            ooo = self._out_of_order
            while nxt in ooo:
                ooo.discard(nxt)
                nxt += 1
            self.next_expected = nxt
        elif seq > self.next_expected:
            self._out_of_order.add(seq)
        return self.next_expected


class UdpCbrSource:
    """Fixed-rate source: one packet every size*8/rate seconds, forever."""

    __slots__ = ("sim", "customer_id", "send_fn", "alloc_uid", "packet_bytes",
                 "period_us", "next_send_us", "packets_sent")

    def __init__(self, sim: Simulator, customer_id: int,
                 send_fn: Callable[[Packet], object],
                 alloc_uid: Callable[[], int],
                 rate_bps: float = 1_280_000.0, packet_bytes: int = 576,
                 start_us: int = 0):
        self.sim = sim
        self.customer_id = customer_id
        self.send_fn = send_fn
        self.alloc_uid = alloc_uid
        self.packet_bytes = packet_bytes
        self.period_us = round(packet_bytes * 8 * 1_000_000 / rate_bps)
        self.next_send_us = start_us
        self.packets_sent = 0

    def start(self) -> None:
        self.sim.schedule(self.next_send_us, self._tick)

    def _tick(self, _arg) -> None:
        now = self.sim.now_us
        pkt = Packet(self.alloc_uid(), self.customer_id, 0, UDP,
                     self.packet_bytes, self.packets_sent, now)
        self.packets_sent += 1
        self.next_send_us = now + self.period_us
        self.send_fn(pkt)
        self.sim.schedule(self.next_send_us, self._tick)


def make_ack(alloc_uid: Callable[[], int], data_pkt: Packet, ack_seq: int,
             now_us: int, ack_bytes: int = 40) -> Packet:
    """ACKs travel the reverse path unconditioned; they keep source color."""
    return Packet(alloc_uid(), data_pkt.customer_id, data_pkt.flow_id,
                  TCP_ACK, ack_bytes, ack_seq, now_us)
