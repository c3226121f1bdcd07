"""Traffic conditioning and multi-color RED queueing.

A customer's conditioner holds two token buckets. Packets that fit the
green bucket are marked green (the reserved share), packets that fit the
yellow bucket are marked yellow, everything else is red. A yellow rate of
zero disables the yellow bucket entirely, giving two-color behavior.

The bottleneck queue is a RED variant with per-color drop parameters and a
pluggable queue-accounting strategy (SAST/SAMT/MAST/MAMT).
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from .config import COLORS, GREEN, RED, YELLOW, RedColorParams
from .simcore import US_PER_S

ACCOUNTING_MODES = ("SAST", "SAMT", "MAST", "MAMT")


class ConfigurationError(ValueError):
    pass


class TokenBucket:
    """Fluid-model token bucket; starts full, refills continuously."""

    __slots__ = ("rate_bps", "capacity_bytes", "tokens_bytes", "last_refill_us")

    def __init__(self, rate_bps: float, capacity_bytes: float, now_us: int = 0):
        self.rate_bps = rate_bps
        self.capacity_bytes = capacity_bytes
        self.tokens_bytes = capacity_bytes
        self.last_refill_us = now_us

    def refill(self, now_us: int) -> None:
        if now_us > self.last_refill_us:
            self.tokens_bytes = min(
                self.capacity_bytes,
                self.tokens_bytes
                + self.rate_bps * (now_us - self.last_refill_us) / (8 * US_PER_S))
            self.last_refill_us = now_us

    def try_consume(self, nbytes: int, now_us: int) -> bool:
        self.refill(now_us)
        if self.tokens_bytes >= nbytes:
            self.tokens_bytes -= nbytes
            return True
        return False


class TrafficConditioner:
    """Dual-bucket marker. Consumes tokens from at most one bucket per packet."""

    __slots__ = ("green", "yellow", "emitted_bytes")

    def __init__(self, green_rate_bps: float, green_capacity_bytes: float,
                 yellow_rate_bps: float = 0.0, yellow_capacity_bytes: float = 0.0,
                 now_us: int = 0):
        self.green = TokenBucket(green_rate_bps, green_capacity_bytes, now_us)
        self.yellow = TokenBucket(yellow_rate_bps, yellow_capacity_bytes, now_us)
        self.emitted_bytes = {GREEN: 0, YELLOW: 0, RED: 0}

    @property
    def two_color(self) -> bool:
        return self.yellow.rate_bps == 0

    def mark(self, size_bytes: int, now_us: int) -> str:
        """Color for one packet of `size_bytes` arriving at `now_us`."""
        if self.green.try_consume(size_bytes, now_us):
            color = GREEN
        elif self.yellow.rate_bps > 0 and self.yellow.try_consume(size_bytes, now_us):
            color = YELLOW
        else:
            color = RED
        self.emitted_bytes[color] += size_bytes
        return color


def red_drop_prob(avg: float, params: RedColorParams) -> float:
    """Piecewise-linear RED drop law: 0 below min_th, max_p ramp, 1 at max_th."""
    if avg <= params.min_th:
        return 0.0
    if avg >= params.max_th:
        return 1.0
    return params.max_p * (avg - params.min_th) / (params.max_th - params.min_th)


@dataclass(frozen=True)
class PolicyDescriptor:
    mode: str
    single_average: bool
    shared_thresholds: bool
    label: str


def classify_policy(mode: str, params: dict[str, RedColorParams]) -> PolicyDescriptor:
    """Validate an accounting mode against per-color parameters.

    The two accounting dimensions are the number of average-queue estimates
    (single vs per-color) and whether the per-color parameter sets coincide.
    A requested mode that contradicts the parameters is rejected.
    """
    if mode not in ACCOUNTING_MODES:
        raise ConfigurationError(f"unknown accounting mode {mode!r}")
    missing = [c for c in COLORS if c not in params]
    if missing:
        raise ConfigurationError(f"missing per-color params for {missing}")
    single_average = mode in ("SAST", "SAMT")
    shared = len({params[c] for c in COLORS}) == 1
    derived = {
        (True, True): "SAST",
        (True, False): "SAMT",
        (False, True): "MAST",
        (False, False): "MAMT",
    }[(single_average, shared)]
    if derived != mode:
        raise ConfigurationError(
            f"requested {mode} but parameters imply {derived} "
            f"(shared thresholds: {shared})")
    label = "color-blind RED" if derived == "SAST" else f"{derived} RED"
    return PolicyDescriptor(mode=derived, single_average=single_average,
                            shared_thresholds=shared, label=label)


class MultiColorRedQueue:
    """RED queue with per-color thresholds and selectable accounting.

    SAST/SAMT keep a single EWMA over all queued packets; MAST/MAMT keep
    one EWMA per color, fed either by the count of packets with the same
    or better color ("cumulative") or by that color's own count ("own").
    The EWMA updates on every arrival, before the drop decision, from the
    occupancy excluding the arriving packet. There is no idle-time decay.
    """

    __slots__ = ("limit", "weight", "params", "accounting", "color_counting",
                 "count_adjust", "rng", "_queue", "counts", "avg", "avgs",
                 "_since_drop", "early_drops", "overflow_drops", "arrivals")

    def __init__(self, limit: int, weight: float,
                 params: dict[str, RedColorParams],
                 rng: random.Random,
                 accounting: str = "SAMT",
                 color_counting: str = "cumulative",
                 count_adjust: bool = False):
        if accounting not in ACCOUNTING_MODES:
            raise ConfigurationError(f"unknown accounting mode {accounting!r}")
        if color_counting not in ("cumulative", "own"):
            raise ConfigurationError(f"unknown color counting {color_counting!r}")
        self.limit = limit
        self.weight = weight
        self.params = dict(params)
        self.accounting = accounting
        self.color_counting = color_counting
        self.count_adjust = count_adjust
        self.rng = rng
        self._queue: deque = deque()
        self.counts = {GREEN: 0, YELLOW: 0, RED: 0}
        self.avg = 0.0                  # single-average modes
        self.avgs = {GREEN: 0.0, YELLOW: 0.0, RED: 0.0}
        self._since_drop = {GREEN: 0, YELLOW: 0, RED: 0}
        self.early_drops = {GREEN: 0, YELLOW: 0, RED: 0}
        self.overflow_drops = {GREEN: 0, YELLOW: 0, RED: 0}
        self.arrivals = 0

    def __len__(self) -> int:
        return len(self._queue)

    @property
    def single_average(self) -> bool:
        return self.accounting in ("SAST", "SAMT")

    def effective_params(self, color: str) -> RedColorParams:
        if self.accounting in ("SAST", "MAST"):
            # single-threshold modes share one parameter set
            return self.params[GREEN]
        return self.params[color]

    def update_avg(self, arriving_color: str) -> None:
        """EWMA step for one arrival; occupancy measured before enqueue."""
        w = self.weight
        if self.single_average:
            total = len(self._queue)
            self.avg += w * (total - self.avg)
        else:
            counts = self.counts
            if self.color_counting == "cumulative":
                g = counts[GREEN]
                y = g + counts[YELLOW]
                r = y + counts[RED]
                occ = {GREEN: g, YELLOW: y, RED: r}
            else:
                occ = counts
            avgs = self.avgs
            for color in COLORS:
                avgs[color] += w * (occ[color] - avgs[color])

    def average_for(self, color: str) -> float:
        return self.avg if self.single_average else self.avgs[color]

    def drop_probability(self, color: str) -> float:
        return red_drop_prob(self.average_for(color), self.effective_params(color))

    def offer(self, pkt, now_us: int) -> bool:
        """Arrival: update average(s), then early-drop test, then tail check."""
        color = pkt.color
        self.arrivals += 1
        self.update_avg(color)
        p = self.drop_probability(color)
        if p > 0.0:
            if self.count_adjust:
                count = self._since_drop[color]
                scaled = p / (1.0 - count * p) if count * p < 1.0 else 1.0
                self._since_drop[color] = count + 1
                p = scaled
            if p >= 1.0 or self.rng.random() < p:
                self.early_drops[color] += 1
                self._since_drop[color] = 0
                return False
        else:
            self._since_drop[color] = 0
        if len(self._queue) >= self.limit:
            self.overflow_drops[color] += 1
            return False
        self._queue.append(pkt)
        self.counts[color] += 1
        return True

    def pop(self):
        pkt = self._queue.popleft()
        self.counts[pkt.color] -= 1
        return pkt

    def dropped_total(self) -> int:
        return (sum(self.early_drops.values())
                + sum(self.overflow_drops.values()))
