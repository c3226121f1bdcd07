"""Per-customer delivery accounting and the two study metrics.

Reserved-rate utilization is delivered green throughput over the green
token rate; it can exceed 1 slightly because buckets start full. Excess
bandwidth is everything delivered yellow or red, and its distribution
across customers is scored with the classic fairness index
(sum x)^2 / (n * sum x^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import GREEN, RED, YELLOW


class MetricError(ValueError):
    pass


@dataclass
class CustomerStats:
    """Bytes received at the traffic destination, split by color."""

    customer_id: int
    kind: str = "tcp"
    duration_s: float = 100.0
    delivered_bytes: dict[str, int] = field(
        default_factory=lambda: {GREEN: 0, YELLOW: 0, RED: 0})
    delivered_packets: int = 0

    def throughput_bps(self, color: str) -> float:
        if self.duration_s <= 0:
            raise MetricError(f"customer {self.customer_id}: duration must be "
                              f"positive, got {self.duration_s}")
        return self.delivered_bytes[color] * 8 / self.duration_s


def reserved_rate_utilization(stats: CustomerStats,
                              green_rate_bps: float) -> float:
    """Green throughput over the reserved (green token) rate."""
    if green_rate_bps <= 0:
        raise MetricError(
            f"customer {stats.customer_id}: reserved-rate utilization is "
            f"undefined for green rate {green_rate_bps}")
    return stats.throughput_bps(GREEN) / green_rate_bps


def excess_throughput(stats: CustomerStats) -> float:
    """Delivered yellow plus red bits per second."""
    return (stats.throughput_bps(YELLOW) + stats.throughput_bps(RED))


def fairness_index(values) -> float:
    """(sum x)^2 / (n * sum x^2) in [0, 1]; an all-zero vector scores 0."""
    xs = list(values)
    if not xs:
        raise MetricError("fairness index needs at least one value")
    if any(x < 0 for x in xs):
        raise MetricError("fairness index is defined for non-negative values")
    total = math.fsum(xs)
    sumsq = math.fsum(x * x for x in xs)
    if sumsq == 0.0:
        return 0.0   # nothing shared: no excess bandwidth existed
    return total * total / (len(xs) * sumsq)
