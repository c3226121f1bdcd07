"""Scenario configuration: dataclasses, validation, and INI-style file IO.

A scenario file mirrors the fixed network parameters (a ``[general]`` and a
``[links]`` section), the RED settings (``[red]`` plus one ``[red.<color>]``
section per color) and one ``[customer:N]`` block per traffic customer.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from io import StringIO
from pathlib import Path

GREEN, YELLOW, RED = "green", "yellow", "red"
COLORS = (GREEN, YELLOW, RED)

PACKET_BYTES = 576
ACK_BYTES = 40


class ConfigError(ValueError):
    """Invalid scenario configuration; `problems` lists offending fields."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid scenario: " + "; ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class RedColorParams:
    """Drop thresholds (packets) and ceiling probability for one color."""
    min_th: float
    max_th: float
    max_p: float

    def problems(self, label: str, queue_limit: int) -> list[str]:
        out = []
        if not 0 <= self.min_th < self.max_th:
            out.append(f"{label}: need 0 <= min_th < max_th, got "
                       f"{self.min_th}/{self.max_th}")
        if self.max_th > queue_limit:
            out.append(f"{label}: max_th {self.max_th} exceeds queue limit {queue_limit}")
        if not 0 < self.max_p <= 1:
            out.append(f"{label}: max_p must be in (0, 1], got {self.max_p}")
        return out


@dataclass(frozen=True)
class RedConfig:
    weight: float = 0.002
    accounting: str = "SAMT"          # SAST | SAMT | MAST | MAMT
    color_counting: str = "cumulative"  # per-color averages: cumulative | own
    count_adjust: bool = False        # inter-drop spacing refinement
    green: RedColorParams = RedColorParams(40, 60, 0.1)
    yellow: RedColorParams = RedColorParams(20, 40, 0.5)
    red: RedColorParams = RedColorParams(0, 10, 1.0)

    def params(self, color: str) -> RedColorParams:
        return getattr(self, color)


@dataclass(frozen=True)
class LinkParams:
    bandwidth_bps: int
    delay_us: int


@dataclass(frozen=True)
class CustomerConfig:
    customer_id: int
    kind: str                     # "tcp" | "udp"
    green_rate_bps: float
    green_bucket_packets: int
    yellow_rate_bps: float = 0.0
    yellow_bucket_packets: int = 1
    flows: int = 5                # TCP connections aggregated by this customer
    udp_rate_bps: float = 1_280_000.0


@dataclass(frozen=True)
class ScenarioConfig:
    customers: tuple[CustomerConfig, ...]
    duration_s: float = 100.0
    seed: int = 1
    packet_size_bytes: int = PACKET_BYTES
    ack_size_bytes: int = ACK_BYTES
    tcp_max_window: int = 64
    queue_limit_packets: int = 60
    access: LinkParams = LinkParams(10_000_000, 1)       # source <-> customer
    customer_link: LinkParams = LinkParams(1_500_000, 5)  # customer/sink <-> router
    bottleneck: LinkParams = LinkParams(1_500_000, 125_000)
    red: RedConfig = field(default_factory=RedConfig)

    def customer(self, customer_id: int) -> CustomerConfig:
        for c in self.customers:
            if c.customer_id == customer_id:
                return c
        raise KeyError(customer_id)

    def problems(self) -> list[str]:
        out: list[str] = []
        if self.duration_s < 0:
            out.append(f"general.duration_s: must be >= 0, got {self.duration_s}")
        if not self.customers:
            out.append("customers: at least one customer required")
        if self.queue_limit_packets <= 0:
            out.append("general.queue_limit_packets: must be positive")
        if self.packet_size_bytes <= 0:
            out.append("general.packet_size_bytes: must be positive")
        if self.tcp_max_window <= 0:
            out.append("general.tcp_max_window: must be positive")
        for name in ("access", "customer_link", "bottleneck"):
            lp: LinkParams = getattr(self, name)
            if lp.bandwidth_bps <= 0:
                out.append(f"links.{name}: bandwidth must be positive")
            if lp.delay_us < 0:
                out.append(f"links.{name}: delay must be >= 0")
        if self.red.accounting not in ("SAST", "SAMT", "MAST", "MAMT"):
            out.append(f"red.accounting: unknown mode {self.red.accounting!r}")
        if self.red.color_counting not in ("cumulative", "own"):
            out.append(f"red.color_counting: unknown scheme {self.red.color_counting!r}")
        if not 0 <= self.red.weight <= 1:
            out.append(f"red.weight: must be in [0, 1], got {self.red.weight}")
        for color in COLORS:
            out.extend(self.red.params(color).problems(
                f"red.{color}", self.queue_limit_packets))
        seen = set()
        for c in self.customers:
            label = f"customer:{c.customer_id}"
            if c.customer_id in seen:
                out.append(f"{label}: duplicate customer id")
            seen.add(c.customer_id)
            if c.kind not in ("tcp", "udp"):
                out.append(f"{label}.kind: must be tcp or udp, got {c.kind!r}")
            if c.green_rate_bps < 0:
                out.append(f"{label}.green_rate_bps: must be >= 0")
            if c.yellow_rate_bps < 0:
                out.append(f"{label}.yellow_rate_bps: must be >= 0")
            if c.green_bucket_packets <= 0:
                out.append(f"{label}.green_bucket_packets: must be positive")
            if c.yellow_bucket_packets <= 0:
                out.append(f"{label}.yellow_bucket_packets: must be positive")
            if c.kind == "tcp" and c.flows <= 0:
                out.append(f"{label}.flows: must be positive")
            if c.kind == "udp" and c.udp_rate_bps <= 0:
                out.append(f"{label}.udp_rate_bps: must be positive")
        return out

    def validate(self) -> "ScenarioConfig":
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self


def default_scenario(green_rate_bps: float = 12_800.0,
                     green_bucket_packets: int = 32,
                     yellow_rate_bps: float = 0.0,
                     yellow_bucket_packets: int = 1,
                     seed: int = 1,
                     red: RedConfig | None = None) -> ScenarioConfig:
    """Reference scenario: 9 TCP customers (5 flows each) plus 1 UDP customer.

    The UDP customer always has yellow rate 0, so its packets are only ever
    green or red.
    """
    customers = [
        CustomerConfig(customer_id=i, kind="tcp",
                       green_rate_bps=green_rate_bps,
                       green_bucket_packets=green_bucket_packets,
                       yellow_rate_bps=yellow_rate_bps,
                       yellow_bucket_packets=yellow_bucket_packets)
        for i in range(1, 10)
    ]
    customers.append(
        CustomerConfig(customer_id=10, kind="udp",
                       green_rate_bps=green_rate_bps,
                       green_bucket_packets=green_bucket_packets,
                       yellow_rate_bps=0.0,
                       yellow_bucket_packets=yellow_bucket_packets))
    cfg = ScenarioConfig(customers=tuple(customers), seed=seed)
    if red is not None:
        cfg = replace(cfg, red=red)
    return cfg


# ---------------------------------------------------------------------------
# file IO

def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def scenario_to_text(cfg: ScenarioConfig) -> str:
    cp = configparser.ConfigParser()
    cp["general"] = {
        "duration_s": repr(cfg.duration_s),
        "seed": str(cfg.seed),
        "packet_size_bytes": str(cfg.packet_size_bytes),
        "ack_size_bytes": str(cfg.ack_size_bytes),
        "tcp_max_window": str(cfg.tcp_max_window),
        "queue_limit_packets": str(cfg.queue_limit_packets),
    }
    cp["links"] = {}
    for name, key in (("access", "access"), ("customer_link", "customer"),
                      ("bottleneck", "bottleneck")):
        lp: LinkParams = getattr(cfg, name)
        cp["links"][f"{key}_bandwidth_bps"] = str(lp.bandwidth_bps)
        cp["links"][f"{key}_delay_us"] = str(lp.delay_us)
    cp["red"] = {
        "weight": repr(cfg.red.weight),
        "accounting": cfg.red.accounting,
        "color_counting": cfg.red.color_counting,
        "count_adjust": str(cfg.red.count_adjust).lower(),
    }
    for color in COLORS:
        p = cfg.red.params(color)
        cp[f"red.{color}"] = {
            "min_th": repr(p.min_th),
            "max_th": repr(p.max_th),
            "max_p": repr(p.max_p),
        }
    for c in cfg.customers:
        sec = f"customer:{c.customer_id}"
        cp[sec] = {
            "kind": c.kind,
            "green_rate_bps": repr(c.green_rate_bps),
            "green_bucket_packets": str(c.green_bucket_packets),
            "yellow_rate_bps": repr(c.yellow_rate_bps),
            "yellow_bucket_packets": str(c.yellow_bucket_packets),
        }
        if c.kind == "tcp":
            cp[sec]["flows"] = str(c.flows)
        else:
            cp[sec]["udp_rate_bps"] = repr(c.udp_rate_bps)
    buf = StringIO()
    cp.write(buf)
    return buf.getvalue()


def scenario_from_text(text: str) -> ScenarioConfig:
    """Parse a scenario file; raises ConfigError naming every bad field."""
    cp = configparser.ConfigParser()
    problems: list[str] = []
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc

    def get(section: str, key: str, conv, default=None):
        if not cp.has_option(section, key):
            if default is not None:
                return default
            problems.append(f"{section}.{key}: missing")
            return None
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except ValueError:
            problems.append(f"{section}.{key}: cannot parse {raw!r}")
            return None

    duration = get("general", "duration_s", float, 100.0)
    seed = get("general", "seed", int, 1)
    pkt = get("general", "packet_size_bytes", int, PACKET_BYTES)
    ack = get("general", "ack_size_bytes", int, ACK_BYTES)
    window = get("general", "tcp_max_window", int, 64)
    qlimit = get("general", "queue_limit_packets", int, 60)

    def link(prefix: str, default: LinkParams) -> LinkParams:
        bw = get("links", f"{prefix}_bandwidth_bps", int, default.bandwidth_bps)
        delay = get("links", f"{prefix}_delay_us", int, default.delay_us)
        return LinkParams(bw or 1, delay if delay is not None else 0)

    access = link("access", LinkParams(10_000_000, 1))
    customer_link = link("customer", LinkParams(1_500_000, 5))
    bottleneck = link("bottleneck", LinkParams(1_500_000, 125_000))

    def color_params(color: str, default: RedColorParams) -> RedColorParams:
        sec = f"red.{color}"
        if not cp.has_section(sec):
            return default
        return RedColorParams(
            min_th=get(sec, "min_th", float, default.min_th),
            max_th=get(sec, "max_th", float, default.max_th),
            max_p=get(sec, "max_p", float, default.max_p))

    base = RedConfig()
    red = RedConfig(
        weight=get("red", "weight", float, base.weight) if cp.has_section("red") else base.weight,
        accounting=cp.get("red", "accounting", fallback=base.accounting).upper(),
        color_counting=cp.get("red", "color_counting", fallback=base.color_counting),
        count_adjust=get("red", "count_adjust", _bool, base.count_adjust) if cp.has_section("red") else base.count_adjust,
        green=color_params(GREEN, base.green),
        yellow=color_params(YELLOW, base.yellow),
        red=color_params(RED, base.red))

    customers = []
    for sec in cp.sections():
        if not sec.startswith("customer:"):
            continue
        try:
            cid = int(sec.split(":", 1)[1])
        except ValueError:
            problems.append(f"{sec}: customer id must be an integer")
            continue
        kind = cp.get(sec, "kind", fallback="tcp")
        customers.append(CustomerConfig(
            customer_id=cid,
            kind=kind,
            green_rate_bps=get(sec, "green_rate_bps", float) or 0.0,
            green_bucket_packets=get(sec, "green_bucket_packets", int, 1) or 1,
            yellow_rate_bps=get(sec, "yellow_rate_bps", float, 0.0) or 0.0,
            yellow_bucket_packets=get(sec, "yellow_bucket_packets", int, 1) or 1,
            flows=get(sec, "flows", int, 5) or 5,
            udp_rate_bps=get(sec, "udp_rate_bps", float, 1_280_000.0) or 1_280_000.0))
    customers.sort(key=lambda c: c.customer_id)

    if problems:
        raise ConfigError(problems)
    cfg = ScenarioConfig(
        customers=tuple(customers), duration_s=duration, seed=seed,
        packet_size_bytes=pkt, ack_size_bytes=ack, tcp_max_window=window,
        queue_limit_packets=qlimit, access=access,
        customer_link=customer_link, bottleneck=bottleneck, red=red)
    return cfg.validate()


def load_scenario(path: str | Path) -> ScenarioConfig:
    return scenario_from_text(Path(path).read_text())


def save_scenario(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(scenario_to_text(cfg))
