"""Full-factorial study designs and their stable simulation IDs.

Two built-in designs are provided. The two-color design sweeps 8 green
rates in ID blocks of width 200 starting at 1 (144 runs per block); the
three-color design sweeps 4 green rates in blocks of width 1000 (720 runs
per block). Within a block IDs follow lexicographic order over
(threshold set, max-p set[, yellow rate, yellow bucket], green bucket),
so the mapping between IDs and parameter combinations is a bijection.

Note: the two-color max-p grid needs six distinct (green, red) pairs to
fill a 144-run block; the grid below uses {0.1,0.1}, {0.1,0.5}, {0.1,1},
{0.5,0.5}, {0.5,1}, {1,1}.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterator, Sequence

from .config import (CustomerConfig, RedColorParams, RedConfig,
                     ScenarioConfig)
from .simcore import stream_seed

TWO_COLOR = "two-color"
THREE_COLOR = "three-color"
MODES = (TWO_COLOR, THREE_COLOR)

PACKET_BYTES = 576
BUCKET_SIZES = (1, 2, 4, 8, 16, 32)
GREEN_THRESHOLDS = (40.0, 60.0)
YELLOW_THRESHOLDS = (20.0, 40.0)

TWO_COLOR_GREEN_RATES = (12_800.0, 25_600.0, 38_400.0, 76_800.0,
                         102_400.0, 128_000.0, 153_600.0, 179_200.0)
TWO_COLOR_ID_BASES = (0, 200, 400, 600, 800, 1000, 1200, 1400)
TWO_COLOR_RED_THRESHOLDS = ((0.0, 10.0), (0.0, 20.0), (0.0, 5.0), (20.0, 40.0))
TWO_COLOR_MAX_P = ((0.1, 0.1), (0.1, 0.5), (0.1, 1.0),
                   (0.5, 0.5), (0.5, 1.0), (1.0, 1.0))

THREE_COLOR_GREEN_RATES = (12_800.0, 25_600.0, 38_400.0, 76_800.0)
THREE_COLOR_ID_BASES = (0, 1000, 2000, 3000)
THREE_COLOR_RED_THRESHOLDS = ((0.0, 10.0), (0.0, 20.0))
THREE_COLOR_MAX_P = ((0.1, 0.5, 1.0), (0.1, 1.0, 1.0), (0.5, 0.5, 1.0),
                     (0.5, 1.0, 1.0), (1.0, 1.0, 1.0))
THREE_COLOR_YELLOW_RATES = (12_800.0, 128_000.0)

BOTTLENECK_BPS = 1_500_000
UDP_RATE_BPS = 1_280_000.0
NUM_TCP_CUSTOMERS = 9
FLOWS_PER_TCP_CUSTOMER = 5


@dataclass(frozen=True)
class Factor:
    name: str
    levels: tuple

    def __post_init__(self):
        if not self.levels:
            raise ValueError(f"factor {self.name}: needs at least one level")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"factor {self.name}: duplicate levels")


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to reproduce one simulation of a design."""

    mode: str
    simulation_id: int
    green_rate_bps: float
    green_bucket_packets: int
    yellow_rate_bps: float
    yellow_bucket_packets: int
    max_p: tuple[float, ...]            # (green, red) or (green, yellow, red)
    red_thresholds: tuple[float, float]
    seed: int

    def factor_levels(self) -> dict[str, object]:
        levels = {
            "green_rate": self.green_rate_bps,
            "red_thresholds": threshold_label(self.red_thresholds),
            "max_p": max_p_label(self.max_p),
            "green_bucket": self.green_bucket_packets,
        }
        if self.mode == THREE_COLOR:
            levels["yellow_rate"] = self.yellow_rate_bps
            levels["yellow_bucket"] = self.yellow_bucket_packets
        return levels


def threshold_label(thresholds: tuple[float, float]) -> str:
    lo, hi = thresholds
    return f"{lo:g}/{hi:g}"


def max_p_label(max_p: Sequence[float]) -> str:
    return ",".join(f"{p:g}" for p in max_p)


def design_factors(mode: str) -> list[Factor]:
    """Factors of a design, in the ID-ordering used by the enumeration."""
    if mode == TWO_COLOR:
        return [
            Factor("green_rate", TWO_COLOR_GREEN_RATES),
            Factor("red_thresholds",
                   tuple(threshold_label(t) for t in TWO_COLOR_RED_THRESHOLDS)),
            Factor("max_p", tuple(max_p_label(p) for p in TWO_COLOR_MAX_P)),
            Factor("green_bucket", BUCKET_SIZES),
        ]
    if mode == THREE_COLOR:
        return [
            Factor("green_rate", THREE_COLOR_GREEN_RATES),
            Factor("red_thresholds",
                   tuple(threshold_label(t) for t in THREE_COLOR_RED_THRESHOLDS)),
            Factor("max_p", tuple(max_p_label(p) for p in THREE_COLOR_MAX_P)),
            Factor("yellow_rate", THREE_COLOR_YELLOW_RATES),
            Factor("yellow_bucket", BUCKET_SIZES),
            Factor("green_bucket", BUCKET_SIZES),
        ]
    raise ValueError(f"unknown design mode {mode!r}")


def block_size(mode: str) -> int:
    if mode == TWO_COLOR:
        return (len(TWO_COLOR_RED_THRESHOLDS) * len(TWO_COLOR_MAX_P)
                * len(BUCKET_SIZES))
    return (len(THREE_COLOR_RED_THRESHOLDS) * len(THREE_COLOR_MAX_P)
            * len(THREE_COLOR_YELLOW_RATES) * len(BUCKET_SIZES)
            * len(BUCKET_SIZES))


def run_seed(master_seed: int, simulation_id: int) -> int:
    return stream_seed(master_seed, f"run.{simulation_id}")


def enumerate_design(mode: str, master_seed: int = 1) -> list[RunSpec]:
    """All runs of a design, ordered by simulation ID."""
    return list(iter_design(mode, master_seed))


def iter_design(mode: str, master_seed: int = 1) -> Iterator[RunSpec]:
    if mode == TWO_COLOR:
        for base, rate in zip(TWO_COLOR_ID_BASES, TWO_COLOR_GREEN_RATES):
            idx = 0
            for thresholds in TWO_COLOR_RED_THRESHOLDS:
                for max_p in TWO_COLOR_MAX_P:
                    for bucket in BUCKET_SIZES:
                        sim_id = base + idx + 1
                        idx += 1
                        yield RunSpec(
                            mode=mode, simulation_id=sim_id,
                            green_rate_bps=rate,
                            green_bucket_packets=bucket,
                            yellow_rate_bps=0.0, yellow_bucket_packets=1,
                            max_p=max_p, red_thresholds=thresholds,
                            seed=run_seed(master_seed, sim_id))
    elif mode == THREE_COLOR:
        for base, rate in zip(THREE_COLOR_ID_BASES, THREE_COLOR_GREEN_RATES):
            idx = 0
            for thresholds in THREE_COLOR_RED_THRESHOLDS:
                for max_p in THREE_COLOR_MAX_P:
                    for yellow_rate in THREE_COLOR_YELLOW_RATES:
                        for yellow_bucket in BUCKET_SIZES:
                            for bucket in BUCKET_SIZES:
                                sim_id = base + idx + 1
                                idx += 1
                                yield RunSpec(
                                    mode=mode, simulation_id=sim_id,
                                    green_rate_bps=rate,
                                    green_bucket_packets=bucket,
                                    yellow_rate_bps=yellow_rate,
                                    yellow_bucket_packets=yellow_bucket,
                                    max_p=max_p, red_thresholds=thresholds,
                                    seed=run_seed(master_seed, sim_id))
    else:
        raise ValueError(f"unknown design mode {mode!r}")


def design_ids(mode: str) -> list[int]:
    bases = TWO_COLOR_ID_BASES if mode == TWO_COLOR else THREE_COLOR_ID_BASES
    width = block_size(mode)
    return [base + i + 1 for base in bases for i in range(width)]


def design_hash(mode: str) -> str:
    """Fingerprint of the enumerated factor combinations (seed-independent)."""
    h = hashlib.sha256()
    for spec in iter_design(mode, master_seed=0):
        h.update(repr((spec.simulation_id, spec.green_rate_bps,
                       spec.green_bucket_packets, spec.yellow_rate_bps,
                       spec.yellow_bucket_packets, spec.max_p,
                       spec.red_thresholds)).encode())
    return h.hexdigest()


def build_scenario(spec: RunSpec) -> ScenarioConfig:
    """ScenarioConfig for one run: 9 TCP customers plus the UDP customer.

    The UDP customer's yellow rate is forced to zero in every mode.
    Oversubscribed green rates are allowed by design.
    """
    if spec.mode == TWO_COLOR:
        maxp_green, maxp_red = spec.max_p
        # no yellow traffic exists; give yellow the red treatment
        yellow_params = RedColorParams(*spec.red_thresholds, maxp_red)
        maxp_yellow = maxp_red
    else:
        maxp_green, maxp_yellow, maxp_red = spec.max_p
        yellow_params = RedColorParams(*YELLOW_THRESHOLDS, maxp_yellow)

    red_cfg = RedConfig(
        green=RedColorParams(*GREEN_THRESHOLDS, maxp_green),
        yellow=yellow_params,
        red=RedColorParams(*spec.red_thresholds, maxp_red))

    customers = [
        CustomerConfig(
            customer_id=i, kind="tcp", flows=FLOWS_PER_TCP_CUSTOMER,
            green_rate_bps=spec.green_rate_bps,
            green_bucket_packets=spec.green_bucket_packets,
            yellow_rate_bps=spec.yellow_rate_bps if spec.mode == THREE_COLOR else 0.0,
            yellow_bucket_packets=spec.yellow_bucket_packets)
        for i in range(1, NUM_TCP_CUSTOMERS + 1)
    ]
    customers.append(CustomerConfig(
        customer_id=NUM_TCP_CUSTOMERS + 1, kind="udp",
        udp_rate_bps=UDP_RATE_BPS,
        green_rate_bps=spec.green_rate_bps,
        green_bucket_packets=spec.green_bucket_packets,
        yellow_rate_bps=0.0,
        yellow_bucket_packets=spec.yellow_bucket_packets))

    return ScenarioConfig(customers=tuple(customers), seed=spec.seed).validate()
